#pragma once

// Brute-force reference implementations used only by tests. Each one follows
// a different route from the library code it checks.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "roilink/geometry.hpp"
#include "roilink/image.hpp"
#include "roilink/saliency.hpp"

namespace oracle {

using roilink::Area;
using roilink::FrameDims;
using roilink::RectPx;

// Pixel mask over a fixed grid large enough for every rect it will see.
class Raster {
 public:
  Raster(int w, int h) : w_(w), h_(h), bits_(static_cast<std::size_t>(w) * h, 0) {}

  void fill(const RectPx& r, std::uint8_t bit = 1) {
    for (int y = r.y; y < r.y + r.h; ++y)
      for (int x = r.x; x < r.x + r.w; ++x) bits_[idx(x, y)] |= bit;
  }
  Area count(std::uint8_t mask = 1) const {
    Area n = 0;
    for (auto b : bits_) n += (b & mask) == mask ? 1 : 0;
    return n;
  }
  Area count_any(std::uint8_t mask) const {
    Area n = 0;
    for (auto b : bits_) n += (b & mask) != 0 ? 1 : 0;
    return n;
  }
  // Bounding box of pixels carrying every bit of `mask`; empty if none.
  RectPx bounds(std::uint8_t mask) const {
    int x0 = w_, y0 = h_, x1 = -1, y1 = -1;
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x)
        if ((bits_[idx(x, y)] & mask) == mask) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  }

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }
  int w_, h_;
  std::vector<std::uint8_t> bits_;
};

inline int extent_of(const RectPx& a, const RectPx& b) {
  return std::max({a.right(), b.right(), a.bottom(), b.bottom(), 1});
}

inline Area inter_pixels(const RectPx& a, const RectPx& b) {
  const int n = extent_of(a, b);
  Raster r(n, n);
  r.fill(a, 1);
  r.fill(b, 2);
  return r.count(3);
}

inline double iou(const RectPx& a, const RectPx& b) {
  const int n = extent_of(a, b);
  Raster r(n, n);
  r.fill(a, 1);
  r.fill(b, 2);
  const Area inter = r.count(3);
  const Area uni = r.count_any(3);
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iogt(const RectPx& p, const RectPx& g) {
  const int n = extent_of(p, g);
  Raster r(n, n);
  r.fill(p, 1);
  r.fill(g, 2);
  return static_cast<double>(r.count(3)) / static_cast<double>(r.count(2));
}

inline Area union_pixels(const std::vector<RectPx>& boxes, int grid) {
  Raster r(grid, grid);
  for (const auto& b : boxes) r.fill(b);
  return r.count(1);
}

// Largest aspect-preserving fit by scanning every major extent downward.
inline RectPx concentric_fit(const RectPx& src, Area max_area) {
  if (src.w <= 0 || src.h <= 0) return {};
  const bool wide = src.w >= src.h;
  const int major = wide ? src.w : src.h;
  const int minor = wide ? src.h : src.w;
  for (int k = major; k >= 1; --k) {
    const int m = static_cast<int>(static_cast<long long>(k) * minor / major);
    const int w = wide ? k : m;
    const int h = wide ? m : k;
    if (static_cast<Area>(w) * h <= max_area) {
      if (w == 0 || h == 0) return {};
      return {src.x + (src.w - w) / 2, src.y + (src.h - h) / 2, w, h};
    }
  }
  return {};
}

// Components by breadth-first flood fill.
struct Component {
  RectPx box;
  std::vector<std::pair<int, int>> pixels;
};

inline std::vector<Component> flood_fill(const roilink::BinaryMap& map, bool eight) {
  const int w = map.dims().width, h = map.dims().height;
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<Component> out;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (!map.at(sx, sy) || seen[sy * w + sx]) continue;
      Component c;
      std::deque<std::pair<int, int>> queue{{sx, sy}};
      seen[sy * w + sx] = 1;
      int x0 = sx, y0 = sy, x1 = sx, y1 = sy;
      while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        c.pixels.emplace_back(x, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!map.at(nx, ny) || seen[ny * w + nx]) continue;
            seen[ny * w + nx] = 1;
            queue.emplace_back(nx, ny);
          }
      }
      c.box = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      out.push_back(std::move(c));
    }
  }
  return out;
}

// Eq-by-eq greedy matching: repeatedly scan all unmatched pairs for the
// maximum and remove it.
inline std::set<std::pair<std::size_t, std::size_t>> greedy_one_to_one(
    const std::vector<RectPx>& preds, const std::vector<RectPx>& gts, double thr) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> pu(preds.size()), gu(gts.size());
  while (true) {
    double best = -1;
    std::size_t bj = 0, bk = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (pu[j]) continue;
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (gu[k]) continue;
        const double s = oracle::iou(preds[j], gts[k]);
        if (s > best) {
          best = s;
          bj = j;
          bk = k;
        }
      }
    }
    if (best < thr || best <= 0.0) break;
    pu[bj] = gu[bk] = true;
    pairs.emplace(bj, bk);
  }
  return pairs;
}

// Direct simulation of the one-to-many loop: take the maximum over all pairs
// not yet consumed, regardless of earlier matches, until it drops below the
// threshold.
struct IogtSim {
  std::set<std::size_t> gt, pred;
};

inline IogtSim iogt_loop(const std::vector<RectPx>& preds, const std::vector<RectPx>& gts,
                         double thr) {
  IogtSim out;
  std::set<std::pair<std::size_t, std::size_t>> consumed;
  while (true) {
    double best = -1;
    std::size_t bj = 0, bk = 0;
    for (std::size_t j = 0; j < preds.size(); ++j)
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (consumed.count({j, k})) continue;
        const double s = oracle::iogt(preds[j], gts[k]);
        if (s > best) {
          best = s;
          bj = j;
          bk = k;
        }
      }
    if (best < thr || best <= 0.0) break;
    consumed.emplace(bj, bk);
    out.pred.insert(bj);
    out.gt.insert(bk);
  }
  return out;
}

// Best accounted area over all subsets that fit.
inline Area best_subset(const std::vector<RectPx>& boxes, Area budget, bool union_acc,
                        int grid) {
  Area best = 0;
  const std::size_t n = boxes.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<RectPx> pick;
    Area sum = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (1u << k)) {
        pick.push_back(boxes[k]);
        sum += boxes[k].area();
      }
    if (sum <= best) continue;
    const Area a = union_acc ? union_pixels(pick, grid) : sum;
    if (a <= budget) best = std::max(best, a);
  }
  return best;
}

// Per-pixel compositor: covered pixels come from the source frame, the rest
// from the grayscale block-mean base layer.
inline roilink::RgbImage reference_composite(const roilink::RgbImage& source,
                                             const std::vector<RectPx>& tiles, int factor) {
  const FrameDims d = source.dims;
  auto gray_at = [&](int x, int y) {
    const std::size_t o = (static_cast<std::size_t>(y) * d.width + x) * 3;
    const unsigned r = source.pixels[o], g = source.pixels[o + 1], b = source.pixels[o + 2];
    return (299 * r + 587 * g + 114 * b + 500) / 1000;
  };
  roilink::RgbImage out(d);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * d.width + x) * 3;
      bool covered = false;
      for (const auto& t : tiles)
        if (x >= t.x && x < t.right() && y >= t.y && y < t.bottom()) covered = true;
      if (covered) {
        for (int c = 0; c < 3; ++c) out.pixels[o + c] = source.pixels[o + c];
        continue;
      }
      const int bx = x / factor, by = y / factor;
      unsigned sum = 0, n = 0;
      for (int yy = by * factor; yy < std::min(by * factor + factor, d.height); ++yy)
        for (int xx = bx * factor; xx < std::min(bx * factor + factor, d.width); ++xx) {
          sum += gray_at(xx, yy);
          ++n;
        }
      const auto v = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
      out.pixels[o] = out.pixels[o + 1] = out.pixels[o + 2] = v;
    }
  }
  return out;
}

inline RectPx random_rect(std::mt19937_64& rng, int frame_w, int frame_h, bool allow_empty = false) {
  std::uniform_int_distribution<int> xs(0, frame_w - 1), ys(0, frame_h - 1);
  const int x = xs(rng), y = ys(rng);
  const int lo = allow_empty ? 0 : 1;
  std::uniform_int_distribution<int> ws(lo, frame_w - x), hs(lo, frame_h - y);
  return {x, y, ws(rng), hs(rng)};
}

}  // namespace oracle
