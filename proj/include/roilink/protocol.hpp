#pragma once

// Drone <-> ground wire format.
//
// Every message is framed as
//
//   magic "RLNK" | version u8 (=1) | msg_type u8 | payload_len u32 LE | payload
//
// and all integers inside payloads are little-endian.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "roilink/error.hpp"
#include "roilink/geometry.hpp"

namespace roilink::wire {

inline constexpr std::uint8_t kMagic[4] = {'R', 'L', 'N', 'K'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = 128u << 20;

enum class MsgType : std::uint8_t {
  Hello = 1,
  FrameMeta = 2,
  BaseLayer = 3,
  RoiList = 4,
  RoiTile = 5,
  CustomRoiRequest = 6,
  Ack = 7,
  Bye = 8,
};

enum class RoiOrigin : std::uint8_t { Algorithmic = 0, OperatorRequested = 1 };

enum class AckCode : std::uint8_t {
  Accepted = 0,
  RejectedOutOfBounds = 1,
  RejectedOverBudget = 2,
  Cancelled = 3,
  FrameReceived = 4,  // ground -> drone flow-control credit for frame_id
};

/// Session parameters, sent by the drone when a ground station connects.
/// payload: width u32, height u32, downscale u16, accounting u8, flags u8.
struct Hello {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t downscale = 8;
  std::uint8_t accounting = 0;  // 0 = union pixels, 1 = sum of crop areas
  std::uint8_t flags = 0;       // bit 0: operator requests bypass the budget

  friend bool operator==(const Hello&, const Hello&) = default;
};

/// payload: frame_id u64, timestamp_us u64, width u32, height u32,
/// downscale u16, budget_r u32 (r * 1e6).
struct FrameMeta {
  std::uint64_t frame_id = 0;
  std::uint64_t timestamp_us = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t downscale = 1;
  std::uint32_t budget_micro = 0;

  double budget_r() const noexcept { return budget_micro / 1e6; }
  friend bool operator==(const FrameMeta&, const FrameMeta&) = default;
};

/// Downscaled grayscale frame.
/// payload: frame_id u64, width u32, height u32, width*height bytes.
struct BaseLayer {
  std::uint64_t frame_id = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const BaseLayer&, const BaseLayer&) = default;
};

struct RoiEntry {
  RectPx rect;
  RoiOrigin origin = RoiOrigin::Algorithmic;
  std::uint64_t request_id = 0;  // 0 for algorithmic RoIs

  friend bool operator==(const RoiEntry&, const RoiEntry&) = default;
};

/// Metadata for the tiles that follow.
/// payload: frame_id u64, count u32, count * (x,y,w,h u32, origin u8, request_id u64).
struct RoiList {
  std::uint64_t frame_id = 0;
  std::vector<RoiEntry> entries;

  friend bool operator==(const RoiList&, const RoiList&) = default;
};

/// payload: frame_id u64, x,y,w,h u32, origin u8, 3*w*h raw RGB bytes.
struct RoiTile {
  std::uint64_t frame_id = 0;
  RectPx rect;
  RoiOrigin origin = RoiOrigin::Algorithmic;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const RoiTile&, const RoiTile&) = default;
};

/// Operator request, ground -> drone. A zero-area rect cancels request_id.
/// payload: request_id u64, x,y,w,h u32, persistent u8.
struct CustomRoiRequest {
  std::uint64_t request_id = 0;
  RectPx rect;
  bool persistent = false;

  bool is_cancel() const noexcept { return rect.empty(); }
  friend bool operator==(const CustomRoiRequest&, const CustomRoiRequest&) = default;
};

/// payload: request_id u64, frame_id u64, code u8.
struct Ack {
  std::uint64_t request_id = 0;
  std::uint64_t frame_id = 0;
  AckCode code = AckCode::Accepted;

  friend bool operator==(const Ack&, const Ack&) = default;
};

/// Empty payload.
struct Bye {
  friend bool operator==(const Bye&, const Bye&) = default;
};

using WireMessage =
    std::variant<Hello, FrameMeta, BaseLayer, RoiList, RoiTile, CustomRoiRequest, Ack, Bye>;

MsgType type_of(const WireMessage& msg) noexcept;
std::string_view name_of(MsgType type) noexcept;

enum class ProtocolErrc {
  BadMagic,
  UnsupportedVersion,
  UnknownType,
  Truncated,
  LengthMismatch,
  Oversize,
  InvalidField,
};

std::string_view name_of(ProtocolErrc code) noexcept;

class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolErrc code, const std::string& detail);
  ProtocolErrc code() const noexcept { return code_; }

 private:
  ProtocolErrc code_;
};

/// Serialises a message. Throws ProtocolError(InvalidField) for values the
/// format cannot carry (negative coordinates, pixel counts that disagree
/// with the declared dims).
std::vector<std::uint8_t> encode(const WireMessage& msg);
void encode_into(const WireMessage& msg, std::vector<std::uint8_t>& out);

struct DecodeOutcome {
  std::optional<WireMessage> message;
  std::optional<ProtocolErrc> error;
  // Bytes covered by the message (or by the bad frame when the framing was
  // intact but the payload was not). 0 when more input is needed or the
  // header itself is bad.
  std::size_t consumed = 0;
};

/// Parses one message from the front of `bytes` without throwing. An
/// incomplete message yields error == Truncated with consumed == 0.
DecodeOutcome try_decode(std::span<const std::uint8_t> bytes) noexcept;

/// Parses exactly one message occupying all of `bytes`; throws
/// ProtocolError otherwise.
WireMessage decode(std::span<const std::uint8_t> bytes);

/// Incremental decoder for a byte stream. Malformed input is skipped by
/// resynchronising on the next magic; each skip is counted.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);

  /// Next complete message, or nullopt if more bytes are needed.
  std::optional<WireMessage> next();

  std::size_t error_count() const noexcept { return errors_; }
  std::optional<ProtocolErrc> last_error() const noexcept { return last_error_; }
  std::size_t buffered() const noexcept { return buffer_.size() - head_; }

 private:
  void drop(std::size_t n);
  void record(ProtocolErrc code);

  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::size_t errors_ = 0;
  std::optional<ProtocolErrc> last_error_;
};

}  // namespace roilink::wire
