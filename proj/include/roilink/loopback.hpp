#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "roilink/drone.hpp"
#include "roilink/ground.hpp"
#include "roilink/saliency.hpp"
#include "roilink/synthetic.hpp"

namespace roilink {

struct LoopbackConfig {
  SessionConfig session{{64, 64}, 8, {}, false};
  double r = 0.2;
  int frames = 10;
  SceneParams scene;  // dims are taken from `session`
  ProposalOptions proposal;
  std::uint64_t seed = 1;
  std::optional<PluginSpec> plugin;
  int max_in_flight = 1;
  // Requests the ground issues right after it has published frame_id.
  std::map<std::uint64_t, std::vector<wire::CustomRoiRequest>> inject;
  std::optional<std::filesystem::path> record_dir;
};

struct LoopbackFrame {
  RgbImage source;
  std::vector<RectPx> objects;
  ProposalSet proposals;
  DroneStepResult sent;
  GroundFrame received;
};

struct LoopbackReport {
  std::vector<LoopbackFrame> frames;
  std::vector<wire::Ack> acks;
  std::size_t violations = 0;
  std::size_t protocol_errors = 0;
};

/// Drone and ground sessions on two threads over an in-memory byte stream,
/// driven by synthetic scenes with heatmap proposals.
LoopbackReport run_loopback(const LoopbackConfig& cfg);

}  // namespace roilink
