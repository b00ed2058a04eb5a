#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roilink/geometry.hpp"

namespace roilink {

struct StageTiming {
  std::string name;
  double fps = 0.0;
};

enum class Composition { Serial, Parallel };

/// Serial: 1 / sum(1 / fps). Parallel (stages pipelined on separate units):
/// min(fps). Throws ConfigError for an empty list or fps <= 0.
double compose_throughput(std::span<const StageTiming> stages, Composition mode);

/// Known stage names.
const std::vector<std::string>& bench_stage_names();

struct BenchConfig {
  std::vector<std::string> stages{"binarize", "components"};
  FrameDims dims{3840, 2160};
  int frames = 100;
  int warmup = 1;
  std::uint64_t seed = 1;
  double r = 0.1;  // for the select and composite stages
};

struct BenchResult {
  std::vector<StageTiming> stages;
  double serial_fps = 0.0;
  double parallel_fps = 0.0;
};

/// Times each stage on synthetic heatmaps and frames at cfg.dims. Every
/// stage runs once per frame; the warm-up frames are not timed. Throws
/// ConfigError for frames < 1 or an unknown stage.
BenchResult bench(const BenchConfig& cfg);

}  // namespace roilink
