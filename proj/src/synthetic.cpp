#include "roilink/synthetic.hpp"

#include <algorithm>

namespace roilink {

namespace {

RectPx random_box(const SceneParams& p, std::mt19937_64& rng) {
  const int max_w = std::min(p.max_size, p.dims.width);
  const int max_h = std::min(p.max_size, p.dims.height);
  const int lo_w = std::min(p.min_size, max_w), lo_h = std::min(p.min_size, max_h);
  const int w = std::uniform_int_distribution<int>(lo_w, max_w)(rng);
  const int h = std::uniform_int_distribution<int>(lo_h, max_h)(rng);
  return {std::uniform_int_distribution<int>(0, p.dims.width - w)(rng),
          std::uniform_int_distribution<int>(0, p.dims.height - h)(rng), w, h};
}

void splat(std::vector<float>& heat, const FrameDims& dims, const RectPx& r, float core) {
  // Core at `core`, a one-pixel halo at half strength.
  const RectPx halo = intersect({r.x - 1, r.y - 1, r.w + 2, r.h + 2}, dims.full());
  for (int y = halo.y; y < halo.bottom(); ++y) {
    for (int x = halo.x; x < halo.right(); ++x) {
      const bool inside = r.contains(RectPx{x, y, 1, 1});
      float& v = heat[static_cast<std::size_t>(y) * dims.width + x];
      v = std::max(v, inside ? core : core * 0.5f);
    }
  }
}

}  // namespace

SyntheticScene make_scene(const SceneParams& p, std::mt19937_64& rng) {
  p.dims.validate();
  RgbImage frame(p.dims);
  std::uniform_int_distribution<int> noise(-6, 6);
  for (std::size_t i = 0; i < frame.pixels.size(); i += 3) {
    frame.pixels[i] = static_cast<std::uint8_t>(20 + noise(rng));
    frame.pixels[i + 1] = static_cast<std::uint8_t>(60 + noise(rng));
    frame.pixels[i + 2] = static_cast<std::uint8_t>(110 + noise(rng));
  }

  std::vector<float> heat(static_cast<std::size_t>(p.dims.area()), 0.0f);
  std::uniform_real_distribution<float> jitter(0.0f, 0.1f);
  for (float& v : heat) v = jitter(rng);

  SyntheticScene scene{RgbImage{}, Heatmap(p.dims, 0.0f), {}};
  const int n = std::uniform_int_distribution<int>(p.min_objects, std::max(p.min_objects, p.max_objects))(rng);
  std::uniform_int_distribution<int> colour(150, 255);
  for (int i = 0; i < n; ++i) {
    const RectPx box = random_box(p, rng);
    scene.objects.push_back(box);
    const std::uint8_t c[3] = {static_cast<std::uint8_t>(colour(rng)),
                               static_cast<std::uint8_t>(colour(rng)),
                               static_cast<std::uint8_t>(colour(rng))};
    for (int y = box.y; y < box.bottom(); ++y) {
      for (int x = box.x; x < box.right(); ++x) {
        const std::size_t at = frame.offset(x, y);
        std::copy(c, c + 3, frame.pixels.begin() + static_cast<std::ptrdiff_t>(at));
      }
    }
    splat(heat, p.dims, box, std::uniform_real_distribution<float>(0.6f, 1.0f)(rng));
  }
  for (int i = 0; i < p.false_blobs; ++i) {
    splat(heat, p.dims, random_box(p, rng), std::uniform_real_distribution<float>(0.5f, 0.8f)(rng));
  }

  scene.frame = std::move(frame);
  scene.heatmap = Heatmap(p.dims, std::move(heat));
  return scene;
}

}  // namespace roilink
