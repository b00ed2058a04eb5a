#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "roilink/image.hpp"
#include "roilink/protocol.hpp"
#include "roilink/selection.hpp"
#include "roilink/transport.hpp"

namespace roilink {

struct SessionConfig {
  FrameDims dims;
  int downscale = 8;
  SelectionPolicy policy;
  // When set, operator tiles are sent on top of the budget instead of
  // consuming it first.
  bool requests_bypass_budget = false;

  wire::Hello hello() const;
  static SessionConfig from_hello(const wire::Hello& hello);
};

/// r quantised to the micro-units carried in FrameMeta.
std::uint32_t budget_micro(double r);

struct DroneStepInput {
  std::uint64_t frame_id = 0;
  std::uint64_t timestamp_us = 0;
  const RgbImage* frame = nullptr;
  const ProposalSet* proposals = nullptr;
  std::span<const wire::CustomRoiRequest> requests;
  double r = 0.0;
};

struct DroneStepResult {
  // FrameMeta, BaseLayer, RoiList, one RoiTile per list entry, then one Ack
  // per operator request.
  std::vector<wire::WireMessage> messages;
  Area budget = 0;
  Area charged = 0;  // accounted pixels of every tile counted in the budget
  std::vector<RectPx> tiles;
};

/// One frame of drone-side work: base layer, RoI selection and tiles.
///
/// Operator requests are charged first, in the given order; a request that
/// is out of bounds or does not fit is rejected through its Ack. The
/// algorithmic proposals are then selected against what is left. The budget
/// is computed from r rounded to micro-units so the ground side can
/// reproduce it from FrameMeta.
DroneStepResult drone_step(const DroneStepInput& input, const SessionConfig& cfg);

/// Thread-safe queue between the upstream reader and the frame loop.
class RequestQueue {
 public:
  void push(const wire::CustomRoiRequest& request);
  std::vector<wire::CustomRoiRequest> drain();

 private:
  std::mutex mutex_;
  std::vector<wire::CustomRoiRequest> pending_;
};

/// Drone end of a session: sends Hello, streams frames, and consumes
/// upstream requests and flow-control acks on a reader thread.
class DroneSession {
 public:
  /// `max_in_flight` > 0 makes send_frame wait until no more than that many
  /// frames are unacknowledged by the ground station.
  DroneSession(std::shared_ptr<MessageChannel> channel, SessionConfig cfg, double r,
               int max_in_flight = 0);
  ~DroneSession();
  DroneSession(const DroneSession&) = delete;
  DroneSession& operator=(const DroneSession&) = delete;

  void start();
  /// Runs drone_step on the frame with every request received so far and
  /// transmits the result. Returns the step result for inspection.
  DroneStepResult send_frame(const RgbImage& frame, const ProposalSet& proposals,
                             std::uint64_t timestamp_us);
  /// Sends Bye and waits for the peer to close.
  void finish();

  std::uint64_t frames_sent() const noexcept { return next_frame_id_ - 1; }
  bool peer_gone() const;

 private:
  void reader_loop();
  void wait_for_credit();

  std::shared_ptr<MessageChannel> channel_;
  SessionConfig cfg_;
  double r_;
  int max_in_flight_;
  std::uint64_t next_frame_id_ = 1;
  RequestQueue queue_;
  std::map<std::uint64_t, wire::CustomRoiRequest> standing_;  // persistent requests

  mutable std::mutex credit_mutex_;
  std::condition_variable credit_cv_;
  std::uint64_t acked_frame_ = 0;
  bool peer_gone_ = false;
  std::thread reader_;
};

}  // namespace roilink
