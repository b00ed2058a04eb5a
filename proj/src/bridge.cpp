#include "roilink/bridge.hpp"

#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "roilink/error.hpp"
#include "roilink/ground.hpp"
#include "roilink/image_io.hpp"
#include "roilink/transport.hpp"

namespace roilink {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(beast::detail::base64::encoded_size(bytes.size()), '\0');
  out.resize(beast::detail::base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

json frame_metadata(const GroundFrame& f) {
  json rois = json::array();
  for (const auto& r : f.rois) {
    rois.push_back({{"x", r.rect.x}, {"y", r.rect.y}, {"w", r.rect.w}, {"h", r.rect.h},
                    {"origin", r.origin == wire::RoiOrigin::OperatorRequested ? "operator" : "algorithmic"},
                    {"request_id", r.request_id}});
  }
  json dets = json::array();
  for (const auto& d : f.detections) {
    dets.push_back({{"x", d.rect.x}, {"y", d.rect.y}, {"w", d.rect.w}, {"h", d.rect.h},
                    {"score", d.confidence.value_or(1.0)}});
  }
  return {{"type", "frame"},       {"frame_id", f.meta.frame_id}, {"timestamp_us", f.meta.timestamp_us},
          {"width", f.meta.width}, {"height", f.meta.height},     {"rois", rois},
          {"detections", dets},    {"undetected", f.undetected},  {"budget", f.budget},
          {"charged", f.charged}};
}

json frame_record(const GroundFrame& f) {
  json j = frame_metadata(f);
  j["png_b64"] = base64_encode(encode_png(f.image));
  return j;
}

json ack_record(const wire::Ack& a) {
  static constexpr const char* names[] = {"accepted", "rejected_out_of_bounds", "rejected_over_budget",
                                          "cancelled", "frame_received"};
  const auto code = static_cast<std::size_t>(a.code);
  return {{"type", "ack"},
          {"request_id", a.request_id},
          {"frame_id", a.frame_id},
          {"code", code < std::size(names) ? names[code] : "unknown"}};
}

wire::CustomRoiRequest parse_operator_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad operator message: ") + e.what(), "ws");
  }
  try {
    const std::string type = j.at("type").get<std::string>();
    wire::CustomRoiRequest req;
    req.request_id = j.at("request_id").get<std::uint64_t>();
    if (type == "cancel") return req;
    if (type != "request") throw ParseError("unknown operator message type '" + type + "'", "ws");
    req.rect = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
    req.persistent = j.value("persistent", false);
    if (req.rect.x < 0 || req.rect.y < 0 || req.rect.w <= 0 || req.rect.h <= 0) {
      throw ParseError("request rect must be non-negative with positive size", "ws");
    }
    return req;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad operator message: ") + e.what(), "ws");
  }
}

namespace {

class WsSession;

}  // namespace

struct WsBridge::Impl : std::enable_shared_from_this<WsBridge::Impl> {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::function<void(const wire::CustomRoiRequest&)> on_request;
  std::set<std::shared_ptr<WsSession>> sessions;  // io thread only
  std::atomic<std::size_t> n_clients{0};
  std::thread thread;

  void do_accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<WsBridge::Impl> owner)
      : ws_(std::move(socket)), owner_(std::move(owner)) {}

  void start() {
    owner_->sessions.insert(shared_from_this());
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->drop();
      self->open_ = true;
      ++self->owner_->n_clients;
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (!open_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void close() {
    beast::error_code ec;
    ws_.next_layer().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      try {
        const auto req = parse_operator_message(text);
        if (self->owner_->on_request) self->owner_->on_request(req);
      } catch (const std::exception& e) {
        spdlog::warn("bridge: {}", e.what());
      }
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->drop();
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  void drop() {
    if (open_) --owner_->n_clients;
    open_ = false;
    owner_->sessions.erase(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  std::shared_ptr<WsBridge::Impl> owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

}  // namespace

void WsBridge::Impl::do_accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<WsSession>(std::move(socket), self)->start();
    self->do_accept();
  });
}

WsBridge::WsBridge(const std::string& address,
                   std::function<void(const wire::CustomRoiRequest&)> on_request)
    : impl_(std::make_shared<Impl>()) {
  const auto [host, port] = parse_address(address);
  const tcp::endpoint ep(asio::ip::make_address(host), port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->on_request = std::move(on_request);
  impl_->do_accept();
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

WsBridge::~WsBridge() { stop(); }

std::uint16_t WsBridge::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t WsBridge::clients() const { return impl_->n_clients; }

void WsBridge::publish(const json& record) {
  auto text = std::make_shared<const std::string>(record.dump());
  asio::post(impl_->io, [impl = impl_, text] {
    for (const auto& s : impl->sessions) s->send(text);
  });
}

void WsBridge::stop() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->io, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& s : impl->sessions) s->close();
  });
  // Closing aborts every pending operation, so run() drains and returns.
  impl_->thread.join();
}

}  // namespace roilink
