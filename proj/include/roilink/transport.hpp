#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "roilink/protocol.hpp"

namespace roilink {

/// Duplex byte stream. One reader thread and any number of writer threads.
class ByteStream {
 public:
  virtual ~ByteStream() = default;

  /// Writes all bytes; throws Error if the stream is closed.
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  /// Blocks until at least one byte is available; returns 0 at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
  /// Ends both directions and wakes a blocked reader. Idempotent.
  virtual void close() = 0;
};

/// Two connected in-memory endpoints.
std::pair<std::shared_ptr<ByteStream>, std::shared_ptr<ByteStream>> make_loopback_pair();

/// "host:port" split; throws ConfigError on malformed input.
std::pair<std::string, std::uint16_t> parse_address(const std::string& address);

std::shared_ptr<ByteStream> tcp_connect(const std::string& address);

/// Listening TCP socket. accept() blocks for one peer.
class TcpListener {
 public:
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const;
  std::shared_ptr<ByteStream> accept();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Framed message I/O over a ByteStream.
class MessageChannel {
 public:
  explicit MessageChannel(std::shared_ptr<ByteStream> stream);

  /// Thread-safe; messages from concurrent senders never interleave.
  void send(const wire::WireMessage& msg);
  /// Blocking; nullopt once the peer closed and the buffer is drained.
  /// Malformed input is skipped and counted.
  std::optional<wire::WireMessage> receive();
  void close() { stream_->close(); }

  std::size_t protocol_errors() const noexcept { return decoder_.error_count(); }
  std::uint64_t bytes_sent() const noexcept { return bytes_sent_; }

 private:
  std::shared_ptr<ByteStream> stream_;
  std::mutex send_mutex_;
  std::vector<std::uint8_t> send_buffer_;
  wire::StreamDecoder decoder_;
  std::atomic<std::uint64_t> bytes_sent_{0};
};

}  // namespace roilink
