#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "roilink/drone.hpp"
#include "roilink/image.hpp"
#include "roilink/plugin.hpp"
#include "roilink/protocol.hpp"
#include "roilink/transport.hpp"

namespace roilink {

/// Upscaled grayscale base with tiles pasted over it in order. Throws
/// GeometryError for a tile outside `dims` or a base layer whose size does
/// not match ceil(dims / factor).
RgbImage composite(const wire::BaseLayer& base, std::span<const wire::RoiTile> tiles,
                   const FrameDims& dims, int factor);

struct GroundFrame {
  wire::FrameMeta meta;
  RgbImage image;
  std::vector<wire::RoiEntry> rois;
  std::vector<ScoredBox> detections;
  std::vector<std::size_t> undetected;  // roi indices whose plugin run failed
  Area budget = 0;
  Area charged = 0;  // accounted pixels of the tiles that count against the budget
  bool complete = true;

  bool within_budget() const noexcept { return charged <= budget; }
};

struct GroundConfig {
  std::optional<PluginSpec> plugin;
  int plugin_workers = 1;
};

/// Ground end of a session. run() consumes the downstream stream on the
/// calling thread; request_roi() may be called from any thread.
class GroundSession {
 public:
  GroundSession(std::shared_ptr<MessageChannel> channel, GroundConfig cfg);

  /// Called once per frame, serialised, in frame order. Requests issued from
  /// inside the callback are seen by the drone before the next frame.
  void on_frame(std::function<void(const GroundFrame&)> callback);
  void on_ack(std::function<void(const wire::Ack&)> callback);

  void request_roi(const wire::CustomRoiRequest& request);
  void cancel(std::uint64_t request_id);

  /// Returns after Bye or end of stream.
  void run();
  void close();

  const std::optional<SessionConfig>& session() const noexcept { return session_; }
  std::size_t frames() const noexcept { return frames_; }
  /// Stream-order violations: tiles without FrameMeta, stale frame ids.
  std::size_t violations() const noexcept { return violations_; }
  std::size_t protocol_errors() const noexcept { return channel_->protocol_errors(); }

 private:
  struct Pending {
    wire::FrameMeta meta;
    std::optional<wire::BaseLayer> base;
    std::optional<wire::RoiList> list;
    std::vector<wire::RoiTile> tiles;
  };

  void handle(wire::WireMessage msg);
  void finish_frame();
  void violation(const std::string& what);

  std::shared_ptr<MessageChannel> channel_;
  GroundConfig cfg_;
  std::vector<std::function<void(const GroundFrame&)>> frame_callbacks_;
  std::vector<std::function<void(const wire::Ack&)>> ack_callbacks_;
  std::optional<SessionConfig> session_;
  std::optional<Pending> pending_;
  std::uint64_t last_frame_id_ = 0;
  std::size_t frames_ = 0;
  std::size_t violations_ = 0;
  bool done_ = false;
};

/// Writes frame_<id>.png and frame_<id>.json per frame plus session.csv.
class Recorder {
 public:
  explicit Recorder(std::filesystem::path dir);
  void record(const GroundFrame& frame);

 private:
  std::filesystem::path dir_;
  std::ofstream csv_;
  std::mutex mutex_;
};

}  // namespace roilink
