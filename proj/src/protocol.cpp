#include "roilink/protocol.hpp"

#include <algorithm>
#include <climits>
#include <cstring>
#include <string>

namespace roilink::wire {

ProtocolError::ProtocolError(ProtocolErrc code, const std::string& detail)
    : Error(std::string(name_of(code)) + ": " + detail), code_(code) {}

MsgType type_of(const WireMessage& msg) noexcept {
  return static_cast<MsgType>(msg.index() + 1);
}

std::string_view name_of(MsgType type) noexcept {
  switch (type) {
    case MsgType::Hello: return "Hello";
    case MsgType::FrameMeta: return "FrameMeta";
    case MsgType::BaseLayer: return "BaseLayer";
    case MsgType::RoiList: return "RoiList";
    case MsgType::RoiTile: return "RoiTile";
    case MsgType::CustomRoiRequest: return "CustomRoiRequest";
    case MsgType::Ack: return "Ack";
    case MsgType::Bye: return "Bye";
  }
  return "?";
}

std::string_view name_of(ProtocolErrc code) noexcept {
  switch (code) {
    case ProtocolErrc::BadMagic: return "bad magic";
    case ProtocolErrc::UnsupportedVersion: return "unsupported version";
    case ProtocolErrc::UnknownType: return "unknown message type";
    case ProtocolErrc::Truncated: return "truncated message";
    case ProtocolErrc::LengthMismatch: return "length mismatch";
    case ProtocolErrc::Oversize: return "payload too large";
    case ProtocolErrc::InvalidField: return "invalid field";
  }
  return "?";
}

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  void rect(const RectPx& r) {
    if (r.x < 0 || r.y < 0 || r.w < 0 || r.h < 0) {
      throw ProtocolError(ProtocolErrc::InvalidField, "negative rect component");
    }
    u32(static_cast<std::uint32_t>(r.x));
    u32(static_cast<std::uint32_t>(r.y));
    u32(static_cast<std::uint32_t>(r.w));
    u32(static_cast<std::uint32_t>(r.h));
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

// Bounds-checked little-endian reader; `ok` latches false on any overrun.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (!ok || b_.size() - pos_ < n) {
      ok = false;
      return {};
    }
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  // Rect fields must fit a signed int.
  RectPx rect() {
    const std::uint32_t v[4] = {u32(), u32(), u32(), u32()};
    for (auto c : v) {
      if (c > static_cast<std::uint32_t>(INT_MAX)) bad_field = true;
    }
    return {static_cast<int>(v[0] & INT_MAX), static_cast<int>(v[1] & INT_MAX),
            static_cast<int>(v[2] & INT_MAX), static_cast<int>(v[3] & INT_MAX)};
  }

  std::size_t remaining() const { return b_.size() - pos_; }
  bool done() const { return ok && pos_ == b_.size(); }

  bool ok = true;
  bool bad_field = false;

 private:
  std::uint64_t le(int n) {
    if (!ok || b_.size() - pos_ < static_cast<std::size_t>(n)) {
      ok = false;
      return 0;
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void check_pixels(std::size_t have, std::uint64_t want, const char* what) {
  if (have != want) {
    throw ProtocolError(ProtocolErrc::InvalidField,
                        std::string(what) + " pixel count does not match its dims");
  }
}

void write_payload(Writer& w, const WireMessage& msg) {
  std::visit(
      [&w](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          w.u32(m.width);
          w.u32(m.height);
          w.u16(m.downscale);
          w.u8(m.accounting);
          w.u8(m.flags);
        } else if constexpr (std::is_same_v<T, FrameMeta>) {
          w.u64(m.frame_id);
          w.u64(m.timestamp_us);
          w.u32(m.width);
          w.u32(m.height);
          w.u16(m.downscale);
          if (m.budget_micro > 1'000'000u) {
            throw ProtocolError(ProtocolErrc::InvalidField, "budget above 1.0");
          }
          w.u32(m.budget_micro);
        } else if constexpr (std::is_same_v<T, BaseLayer>) {
          check_pixels(m.pixels.size(), std::uint64_t{m.width} * m.height, "base layer");
          w.u64(m.frame_id);
          w.u32(m.width);
          w.u32(m.height);
          w.bytes(m.pixels);
        } else if constexpr (std::is_same_v<T, RoiList>) {
          w.u64(m.frame_id);
          w.u32(static_cast<std::uint32_t>(m.entries.size()));
          for (const auto& e : m.entries) {
            w.rect(e.rect);
            w.u8(static_cast<std::uint8_t>(e.origin));
            w.u64(e.request_id);
          }
        } else if constexpr (std::is_same_v<T, RoiTile>) {
          if (m.rect.w < 0 || m.rect.h < 0) {
            throw ProtocolError(ProtocolErrc::InvalidField, "negative tile dims");
          }
          check_pixels(m.pixels.size(), 3ull * static_cast<std::uint64_t>(m.rect.w) * m.rect.h,
                       "tile");
          w.u64(m.frame_id);
          w.rect(m.rect);
          w.u8(static_cast<std::uint8_t>(m.origin));
          w.bytes(m.pixels);
        } else if constexpr (std::is_same_v<T, CustomRoiRequest>) {
          w.u64(m.request_id);
          w.rect(m.rect);
          w.u8(m.persistent ? 1 : 0);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u64(m.request_id);
          w.u64(m.frame_id);
          w.u8(static_cast<std::uint8_t>(m.code));
        } else {
          static_assert(std::is_same_v<T, Bye>);
        }
      },
      msg);
}

bool valid_origin(std::uint8_t v) { return v <= 1; }

// Parses a payload whose framing is already validated.
std::variant<WireMessage, ProtocolErrc> parse_payload(MsgType type,
                                                      std::span<const std::uint8_t> payload) {
  Reader r(payload);
  auto finish = [&r](WireMessage m) -> std::variant<WireMessage, ProtocolErrc> {
    if (!r.done()) return ProtocolErrc::LengthMismatch;
    if (r.bad_field) return ProtocolErrc::InvalidField;
    return m;
  };
  switch (type) {
    case MsgType::Hello: {
      Hello m;
      m.width = r.u32();
      m.height = r.u32();
      m.downscale = r.u16();
      m.accounting = r.u8();
      m.flags = r.u8();
      if (r.ok && m.accounting > 1) r.bad_field = true;
      return finish(m);
    }
    case MsgType::FrameMeta: {
      FrameMeta m;
      m.frame_id = r.u64();
      m.timestamp_us = r.u64();
      m.width = r.u32();
      m.height = r.u32();
      m.downscale = r.u16();
      m.budget_micro = r.u32();
      if (r.ok && m.budget_micro > 1'000'000u) r.bad_field = true;
      return finish(m);
    }
    case MsgType::BaseLayer: {
      BaseLayer m;
      m.frame_id = r.u64();
      m.width = r.u32();
      m.height = r.u32();
      const std::uint64_t n = std::uint64_t{m.width} * m.height;
      if (!r.ok || n != r.remaining()) return ProtocolErrc::LengthMismatch;
      auto px = r.bytes(static_cast<std::size_t>(n));
      m.pixels.assign(px.begin(), px.end());
      return finish(std::move(m));
    }
    case MsgType::RoiList: {
      RoiList m;
      m.frame_id = r.u64();
      const std::uint32_t count = r.u32();
      if (!r.ok || std::uint64_t{count} * 25 != r.remaining()) {
        return ProtocolErrc::LengthMismatch;
      }
      m.entries.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        RoiEntry e;
        e.rect = r.rect();
        const std::uint8_t origin = r.u8();
        if (!valid_origin(origin)) r.bad_field = true;
        e.origin = static_cast<RoiOrigin>(origin);
        e.request_id = r.u64();
        m.entries.push_back(e);
      }
      return finish(std::move(m));
    }
    case MsgType::RoiTile: {
      RoiTile m;
      m.frame_id = r.u64();
      m.rect = r.rect();
      const std::uint8_t origin = r.u8();
      if (!r.ok) return ProtocolErrc::LengthMismatch;
      if (r.bad_field || !valid_origin(origin)) return ProtocolErrc::InvalidField;
      m.origin = static_cast<RoiOrigin>(origin);
      const std::uint64_t n = 3ull * static_cast<std::uint64_t>(m.rect.w) * m.rect.h;
      if (n != r.remaining()) return ProtocolErrc::LengthMismatch;
      auto px = r.bytes(static_cast<std::size_t>(n));
      m.pixels.assign(px.begin(), px.end());
      return finish(std::move(m));
    }
    case MsgType::CustomRoiRequest: {
      CustomRoiRequest m;
      m.request_id = r.u64();
      m.rect = r.rect();
      const std::uint8_t persistent = r.u8();
      if (r.ok && persistent > 1) r.bad_field = true;
      m.persistent = persistent == 1;
      return finish(m);
    }
    case MsgType::Ack: {
      Ack m;
      m.request_id = r.u64();
      m.frame_id = r.u64();
      const std::uint8_t code = r.u8();
      if (r.ok && code > static_cast<std::uint8_t>(AckCode::FrameReceived)) r.bad_field = true;
      m.code = static_cast<AckCode>(code);
      return finish(m);
    }
    case MsgType::Bye:
      return finish(Bye{});
  }
  return ProtocolErrc::UnknownType;
}

bool known_type(std::uint8_t t) { return t >= 1 && t <= 8; }

}  // namespace

void encode_into(const WireMessage& msg, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type_of(msg)));
  out.resize(out.size() + 4);
  Writer w(out);
  try {
    write_payload(w, msg);
  } catch (...) {
    out.resize(start);
    throw;
  }
  const std::size_t len = out.size() - start - kHeaderSize;
  if (len > kMaxPayload) {
    out.resize(start);
    throw ProtocolError(ProtocolErrc::Oversize, "payload of " + std::to_string(len) + " bytes");
  }
  for (int i = 0; i < 4; ++i) out[start + 6 + i] = static_cast<std::uint8_t>(len >> (8 * i));
}

std::vector<std::uint8_t> encode(const WireMessage& msg) {
  std::vector<std::uint8_t> out;
  encode_into(msg, out);
  return out;
}

DecodeOutcome try_decode(std::span<const std::uint8_t> bytes) noexcept {
  DecodeOutcome out;
  const std::size_t magic_have = std::min<std::size_t>(bytes.size(), 4);
  if (!std::equal(bytes.begin(), bytes.begin() + magic_have, std::begin(kMagic))) {
    out.error = ProtocolErrc::BadMagic;
    return out;
  }
  if (bytes.size() < kHeaderSize) {
    out.error = ProtocolErrc::Truncated;
    return out;
  }
  if (bytes[4] != kVersion) {
    out.error = ProtocolErrc::UnsupportedVersion;
    return out;
  }
  if (!known_type(bytes[5])) {
    out.error = ProtocolErrc::UnknownType;
    return out;
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[6 + i]) << (8 * i);
  if (len > kMaxPayload) {
    out.error = ProtocolErrc::Oversize;
    return out;
  }
  if (bytes.size() - kHeaderSize < len) {
    out.error = ProtocolErrc::Truncated;
    return out;
  }
  out.consumed = kHeaderSize + len;
  try {
    auto parsed = parse_payload(static_cast<MsgType>(bytes[5]), bytes.subspan(kHeaderSize, len));
    if (auto* err = std::get_if<ProtocolErrc>(&parsed)) {
      out.error = *err;
    } else {
      out.message = std::move(std::get<WireMessage>(parsed));
    }
  } catch (const std::bad_alloc&) {
    out.error = ProtocolErrc::Oversize;
  }
  return out;
}

WireMessage decode(std::span<const std::uint8_t> bytes) {
  DecodeOutcome r = try_decode(bytes);
  if (r.error) {
    throw ProtocolError(*r.error, "decoding " + std::to_string(bytes.size()) + " bytes");
  }
  if (r.consumed != bytes.size()) {
    throw ProtocolError(ProtocolErrc::LengthMismatch,
                        std::to_string(bytes.size() - r.consumed) + " trailing bytes");
  }
  return std::move(*r.message);
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (head_ > 0 && head_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

void StreamDecoder::drop(std::size_t n) { head_ = std::min(buffer_.size(), head_ + n); }

void StreamDecoder::record(ProtocolErrc code) {
  ++errors_;
  last_error_ = code;
}

std::optional<WireMessage> StreamDecoder::next() {
  while (head_ < buffer_.size()) {
    const std::span<const std::uint8_t> view(buffer_.data() + head_, buffer_.size() - head_);
    DecodeOutcome r = try_decode(view);
    if (r.message) {
      drop(r.consumed);
      return std::move(r.message);
    }
    const ProtocolErrc err = *r.error;
    if (err == ProtocolErrc::Truncated) return std::nullopt;
    record(err);
    if (r.consumed > 0) {
      // Framing was intact; skip the whole bad frame.
      drop(r.consumed);
      continue;
    }
    // Resynchronise on the next magic, or keep a partial magic at the tail.
    auto it = std::search(view.begin() + 1, view.end(), std::begin(kMagic), std::end(kMagic));
    std::size_t skip = static_cast<std::size_t>(it - view.begin());
    if (it == view.end()) {
      skip = view.size();
      for (std::size_t keep = std::min<std::size_t>(3, view.size() - 1); keep > 0; --keep) {
        if (std::equal(view.end() - keep, view.end(), std::begin(kMagic))) {
          skip = view.size() - keep;
          break;
        }
      }
    }
    drop(skip);
  }
  return std::nullopt;
}

}  // namespace roilink::wire
