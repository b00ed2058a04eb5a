#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "roilink/protocol.hpp"

namespace roilink {

struct GroundFrame;

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// {type:"frame", frame_id, timestamp_us, rois:[{x,y,w,h,origin,request_id}],
///  detections:[{x,y,w,h,score}], undetected:[...], budget, charged}
nlohmann::json frame_metadata(const GroundFrame& frame);
/// frame_metadata plus png_b64 of the composited image.
nlohmann::json frame_record(const GroundFrame& frame);
/// {type:"ack", request_id, frame_id, code}
nlohmann::json ack_record(const wire::Ack& ack);

/// Parses an upstream {type:"request", ...} or {type:"cancel", request_id}
/// message. A cancel comes back as a zero-area request. Throws ParseError.
wire::CustomRoiRequest parse_operator_message(std::string_view text);

/// WebSocket server fanning JSON records out to every connected client and
/// passing operator requests to `on_request`.
class WsBridge {
 public:
  WsBridge(const std::string& address, std::function<void(const wire::CustomRoiRequest&)> on_request);
  ~WsBridge();
  WsBridge(const WsBridge&) = delete;
  WsBridge& operator=(const WsBridge&) = delete;

  std::uint16_t port() const;
  void publish(const nlohmann::json& record);
  std::size_t clients() const;
  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace roilink
