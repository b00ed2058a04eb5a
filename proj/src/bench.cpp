#include "roilink/bench.hpp"

#include <chrono>
#include <random>

#include "roilink/drone.hpp"
#include "roilink/error.hpp"
#include "roilink/ground.hpp"
#include "roilink/saliency.hpp"
#include "roilink/synthetic.hpp"

namespace roilink {

double compose_throughput(std::span<const StageTiming> stages, Composition mode) {
  if (stages.empty()) throw ConfigError("no stages to compose");
  double inv = 0.0, lo = stages.front().fps;
  for (const auto& s : stages) {
    if (!(s.fps > 0.0)) throw ConfigError("stage '" + s.name + "' has non-positive fps");
    inv += 1.0 / s.fps;
    lo = std::min(lo, s.fps);
  }
  // 1/(1/x) can land an ulp above x.
  return mode == Composition::Serial ? std::min(1.0 / inv, lo) : lo;
}

const std::vector<std::string>& bench_stage_names() {
  static const std::vector<std::string> names{"binarize", "components", "select", "downscale",
                                              "composite"};
  return names;
}

namespace {

// Intermediate products handed from one stage to the next.
struct Work {
  const SyntheticScene* scene = nullptr;
  BinaryMap binary;
  ProposalSet proposals;
  std::vector<RectPx> tiles;
  GrayImage base;
};

}  // namespace

BenchResult bench(const BenchConfig& cfg) {
  if (cfg.frames < 1) throw ConfigError("bench needs at least one frame");
  if (cfg.warmup < 0) throw ConfigError("warm-up count must be >= 0");
  if (cfg.stages.empty()) throw ConfigError("no stages selected");
  cfg.dims.validate();
  for (const auto& s : cfg.stages) {
    if (std::find(bench_stage_names().begin(), bench_stage_names().end(), s) ==
        bench_stage_names().end()) {
      throw ConfigError("unknown stage '" + s + "'");
    }
  }

  // A small pool of scenes, cycled; 4K heatmaps are large.
  std::mt19937_64 rng(cfg.seed);
  SceneParams params;
  params.dims = cfg.dims;
  params.min_objects = 3;
  params.max_objects = 12;
  params.min_size = std::max(2, std::min(cfg.dims.width, cfg.dims.height) / 200);
  params.max_size = std::max(params.min_size, std::min(cfg.dims.width, cfg.dims.height) / 20);
  params.false_blobs = 3;
  std::vector<SyntheticScene> pool;
  for (int i = 0; i < std::min(cfg.frames + cfg.warmup, 3); ++i) pool.push_back(make_scene(params, rng));

  const SessionConfig session{cfg.dims, 8, {}, false};
  const Area budget = pixel_budget(cfg.r, cfg.dims);
  std::vector<double> seconds(cfg.stages.size(), 0.0);

  for (int f = 0; f < cfg.warmup + cfg.frames; ++f) {
    Work w;
    w.scene = &pool[static_cast<std::size_t>(f) % pool.size()];
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
      const std::string& name = cfg.stages[s];
      const auto t0 = std::chrono::steady_clock::now();
      if (name == "binarize") {
        w.binary = binarize(w.scene->heatmap, 0.5);
      } else if (name == "components") {
        if (w.binary.dims().area() == 0) w.binary = binarize(w.scene->heatmap, 0.5);
        w.proposals.frame = cfg.dims;
        w.proposals.boxes.clear();
        for (const auto& r : component_boxes(w.binary, Connectivity::Eight)) {
          w.proposals.boxes.push_back({r, std::nullopt});
        }
      } else if (name == "select") {
        if (w.proposals.frame.area() == 0) w.proposals = propose_from_heatmap(w.scene->heatmap);
        w.tiles = select_with_budget(w.proposals, budget, session.policy).rects(w.proposals);
      } else if (name == "downscale") {
        w.base = downscale(to_gray(w.scene->frame), session.downscale);
      } else if (name == "composite") {
        if (w.base.dims.area() == 0) w.base = downscale(to_gray(w.scene->frame), session.downscale);
        wire::BaseLayer layer{0, static_cast<std::uint32_t>(w.base.dims.width),
                              static_cast<std::uint32_t>(w.base.dims.height), w.base.pixels};
        std::vector<wire::RoiTile> tiles;
        for (const auto& r : w.tiles) {
          tiles.push_back({0, r, wire::RoiOrigin::Algorithmic, crop(w.scene->frame, r)});
        }
        const RgbImage img = composite(layer, tiles, cfg.dims, session.downscale);
        if (img.pixels.empty()) throw Error("empty composite");
      }
      const auto t1 = std::chrono::steady_clock::now();
      if (f >= cfg.warmup) seconds[s] += std::chrono::duration<double>(t1 - t0).count();
    }
  }

  BenchResult out;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const double sec = std::max(seconds[s], 1e-9);
    out.stages.push_back({cfg.stages[s], cfg.frames / sec});
  }
  out.serial_fps = compose_throughput(out.stages, Composition::Serial);
  out.parallel_fps = compose_throughput(out.stages, Composition::Parallel);
  return out;
}

}  // namespace roilink
