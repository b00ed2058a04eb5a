#include "roilink/loopback.hpp"

#include <thread>

#include "roilink/error.hpp"

namespace roilink {

LoopbackReport run_loopback(const LoopbackConfig& cfg) {
  if (cfg.frames < 0) throw ConfigError("frame count must be >= 0");
  auto [drone_end, ground_end] = make_loopback_pair();
  auto drone_ch = std::make_shared<MessageChannel>(drone_end);
  auto ground_ch = std::make_shared<MessageChannel>(ground_end);

  LoopbackReport report;
  std::vector<GroundFrame> received;
  std::optional<Recorder> recorder;
  if (cfg.record_dir) recorder.emplace(*cfg.record_dir);

  GroundSession ground(ground_ch, GroundConfig{cfg.plugin, 1});
  ground.on_frame([&](const GroundFrame& f) {
    if (recorder) recorder->record(f);
    received.push_back(f);
    if (auto it = cfg.inject.find(f.meta.frame_id); it != cfg.inject.end()) {
      for (const auto& req : it->second) ground.request_roi(req);
    }
  });
  ground.on_ack([&](const wire::Ack& a) { report.acks.push_back(a); });

  std::exception_ptr ground_error;
  std::thread ground_thread([&] {
    try {
      ground.run();
      ground_ch->send(wire::Bye{});
    } catch (...) {
      ground_error = std::current_exception();
    }
    ground_ch->close();
  });

  std::mt19937_64 rng(cfg.seed);
  SceneParams scene = cfg.scene;
  scene.dims = cfg.session.dims;
  std::exception_ptr drone_error;
  try {
    DroneSession drone(drone_ch, cfg.session, cfg.r, cfg.max_in_flight);
    drone.start();
    for (int i = 0; i < cfg.frames; ++i) {
      SyntheticScene s = make_scene(scene, rng);
      LoopbackFrame lf;
      lf.proposals = propose_from_heatmap(s.heatmap, cfg.proposal);
      lf.sent = drone.send_frame(s.frame, lf.proposals, static_cast<std::uint64_t>(i) * 33'333);
      lf.source = std::move(s.frame);
      lf.objects = std::move(s.objects);
      report.frames.push_back(std::move(lf));
    }
    drone.finish();
  } catch (...) {
    drone_error = std::current_exception();
    drone_ch->close();
  }
  ground_thread.join();
  if (drone_error) std::rethrow_exception(drone_error);
  if (ground_error) std::rethrow_exception(ground_error);

  if (received.size() != report.frames.size()) {
    throw Error("ground published " + std::to_string(received.size()) + " of " +
                std::to_string(report.frames.size()) + " frames");
  }
  for (std::size_t i = 0; i < received.size(); ++i) report.frames[i].received = std::move(received[i]);
  report.violations = ground.violations();
  report.protocol_errors = ground.protocol_errors() + drone_ch->protocol_errors();
  return report;
}

}  // namespace roilink
