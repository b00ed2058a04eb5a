#include "roilink/transport.hpp"

#include <condition_variable>
#include <cstring>
#include <deque>

#include <boost/asio.hpp>

#include "roilink/error.hpp"

namespace roilink {

namespace {

class Pipe {
 public:
  void write(std::span<const std::uint8_t> bytes) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) throw Error("write on closed loopback stream");
      data_.insert(data_.end(), bytes.begin(), bytes.end());
    }
    cv_.notify_all();
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return !data_.empty() || closed_; });
    const std::size_t n = std::min(buffer.size(), data_.size());
    std::copy_n(data_.begin(), n, buffer.begin());
    data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> data_;
  bool closed_ = false;
};

class LoopbackEnd : public ByteStream {
 public:
  LoopbackEnd(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackEnd() override { close(); }

  void write(std::span<const std::uint8_t> bytes) override { out_->write(bytes); }
  std::size_t read_some(std::span<std::uint8_t> buffer) override { return in_->read_some(buffer); }
  void close() override {
    out_->close();
    in_->close();
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

namespace asio = boost::asio;
using asio::ip::tcp;

class TcpStream : public ByteStream {
 public:
  TcpStream(std::shared_ptr<asio::io_context> io, tcp::socket socket)
      : io_(std::move(io)), socket_(std::move(socket)) {
    socket_.set_option(tcp::no_delay(true));
  }
  ~TcpStream() override { close(); }

  void write(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(write_mutex_);
    boost::system::error_code ec;
    asio::write(socket_, asio::buffer(bytes.data(), bytes.size()), ec);
    if (ec) throw Error("tcp write failed: " + ec.message());
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) override {
    boost::system::error_code ec;
    const std::size_t n = socket_.read_some(asio::buffer(buffer.data(), buffer.size()), ec);
    if (ec) return 0;
    return n;
  }

  void close() override {
    std::lock_guard lock(close_mutex_);
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
  }

 private:
  std::shared_ptr<asio::io_context> io_;
  tcp::socket socket_;
  std::mutex write_mutex_;
  std::mutex close_mutex_;
  bool closed_ = false;
};

}  // namespace

std::pair<std::shared_ptr<ByteStream>, std::shared_ptr<ByteStream>> make_loopback_pair() {
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  return {std::make_shared<LoopbackEnd>(b_to_a, a_to_b),
          std::make_shared<LoopbackEnd>(a_to_b, b_to_a)};
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address must be host:port: " + address);
  std::string host = address.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  try {
    const int port = std::stoi(address.substr(colon + 1));
    if (port < 0 || port > 65535) throw ConfigError("port out of range: " + address);
    return {host, static_cast<std::uint16_t>(port)};
  } catch (const std::logic_error&) {
    throw ConfigError("bad port in address: " + address);
  }
}

std::shared_ptr<ByteStream> tcp_connect(const std::string& address) {
  const auto [host, port] = parse_address(address);
  auto io = std::make_shared<asio::io_context>();
  tcp::resolver resolver(*io);
  tcp::socket socket(*io);
  boost::system::error_code ec;
  asio::connect(socket, resolver.resolve(host, std::to_string(port), ec), ec);
  if (ec) throw Error("cannot connect to " + address + ": " + ec.message());
  return std::make_shared<TcpStream>(io, std::move(socket));
}

struct TcpListener::Impl {
  std::shared_ptr<asio::io_context> io = std::make_shared<asio::io_context>();
  tcp::acceptor acceptor{*io};
};

TcpListener::TcpListener(const std::string& address) : impl_(std::make_unique<Impl>()) {
  const auto [host, port] = parse_address(address);
  boost::system::error_code ec;
  const auto ip = asio::ip::make_address(host, ec);
  if (ec) throw ConfigError("bad listen host: " + host);
  const tcp::endpoint ep(ip, port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep, ec);
  if (ec) throw Error("cannot bind " + address + ": " + ec.message());
  impl_->acceptor.listen();
}

TcpListener::~TcpListener() = default;

std::uint16_t TcpListener::port() const { return impl_->acceptor.local_endpoint().port(); }

std::shared_ptr<ByteStream> TcpListener::accept() {
  tcp::socket socket(*impl_->io);
  impl_->acceptor.accept(socket);
  return std::make_shared<TcpStream>(impl_->io, std::move(socket));
}

MessageChannel::MessageChannel(std::shared_ptr<ByteStream> stream) : stream_(std::move(stream)) {}

void MessageChannel::send(const wire::WireMessage& msg) {
  std::lock_guard lock(send_mutex_);
  send_buffer_.clear();
  wire::encode_into(msg, send_buffer_);
  stream_->write(send_buffer_);
  bytes_sent_ += send_buffer_.size();
}

std::optional<wire::WireMessage> MessageChannel::receive() {
  std::uint8_t chunk[64 * 1024];
  while (true) {
    if (auto msg = decoder_.next()) return msg;
    const std::size_t n = stream_->read_some(chunk);
    if (n == 0) return std::nullopt;
    decoder_.feed(std::span<const std::uint8_t>(chunk, n));
  }
}

}  // namespace roilink
