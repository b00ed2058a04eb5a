#pragma once

#include <random>
#include <vector>

#include "roilink/image.hpp"
#include "roilink/saliency.hpp"

namespace roilink {

struct SceneParams {
  FrameDims dims{64, 64};
  int min_objects = 1;
  int max_objects = 5;
  int min_size = 2;
  int max_size = 12;
  int false_blobs = 1;  // salient regions with no object under them
};

/// Water-coloured frame with a few bright objects and a matching heatmap.
struct SyntheticScene {
  RgbImage frame;
  Heatmap heatmap;
  std::vector<RectPx> objects;
};

SyntheticScene make_scene(const SceneParams& params, std::mt19937_64& rng);

}  // namespace roilink
