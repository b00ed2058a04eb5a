#include "roilink/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include "roilink/error.hpp"

namespace roilink {

std::ostream& operator<<(std::ostream& os, const RectPx& r) {
  return os << '(' << r.x << ',' << r.y << ',' << r.w << ',' << r.h << ')';
}

void FrameDims::validate() const {
  if (width < 1 || height < 1) {
    throw GeometryError("frame dims must be at least 1x1, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
}

Ratio::Ratio(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ConfigError("ratio outside [0,1]: " + std::to_string(value));
  }
}

RectPx intersect(const RectPx& a, const RectPx& b) noexcept {
  if (a.empty() || b.empty()) return {};
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {};
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const RectPx& a, const RectPx& b) noexcept {
  const Area inter = intersect(a, b).area();
  const Area uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double iogt(const RectPx& p, const RectPx& g) {
  if (g.empty()) throw GeometryError("degenerate ground truth");
  return static_cast<double>(intersect(p, g).area()) /
         static_cast<double>(g.area());
}

Area union_area(std::span<const RectPx> boxes) {
  std::vector<int> xs;
  xs.reserve(boxes.size() * 2);
  for (const auto& b : boxes) {
    if (b.empty()) continue;
    xs.push_back(b.x);
    xs.push_back(b.right());
  }
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  Area total = 0;
  std::vector<std::pair<int, int>> spans;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const int x0 = xs[i];
    const int x1 = xs[i + 1];
    spans.clear();
    for (const auto& b : boxes) {
      if (!b.empty() && b.x <= x0 && b.right() >= x1) {
        spans.emplace_back(b.y, b.bottom());
      }
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    Area covered = 0;
    int cur0 = spans.front().first;
    int cur1 = spans.front().second;
    for (const auto& [s0, s1] : spans) {
      if (s0 > cur1) {
        covered += cur1 - cur0;
        cur0 = s0;
        cur1 = s1;
      } else {
        cur1 = std::max(cur1, s1);
      }
    }
    covered += cur1 - cur0;
    total += covered * static_cast<Area>(x1 - x0);
  }
  return total;
}

RectPx concentric_member(const RectPx& src, int major_extent) {
  if (src.empty() || major_extent <= 0) return {};
  const bool wide = src.w >= src.h;
  const int major = wide ? src.w : src.h;
  const int minor = wide ? src.h : src.w;
  const int k = std::min(major_extent, major);
  const int k_minor =
      static_cast<int>(static_cast<Area>(k) * minor / major);
  const int w = wide ? k : k_minor;
  const int h = wide ? k_minor : k;
  if (w <= 0 || h <= 0) return {};
  return {src.x + (src.w - w) / 2, src.y + (src.h - h) / 2, w, h};
}

RectPx concentric_fit_if(const RectPx& src,
                         const std::function<bool(const RectPx&)>& accept) {
  if (src.empty()) return {};
  const int major = std::max(src.w, src.h);
  if (accept(src)) return src;
  // Invariant: member(lo) accepted (lo == 0 stands for "nothing"),
  // member(hi) rejected.
  int lo = 0;
  int hi = major;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    const RectPx m = concentric_member(src, mid);
    if (m.empty() || accept(m)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return concentric_member(src, lo);
}

RectPx concentric_fit(const RectPx& src, Area max_area) {
  if (src.empty() || max_area <= 0) return {};
  if (max_area >= src.area()) return src;
  return concentric_fit_if(
      src, [max_area](const RectPx& r) { return r.area() <= max_area; });
}

Area pixel_budget(double r, Area total) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw ConfigError("bandwidth portion outside [0,1]: " + std::to_string(r));
  }
  const double v = r * static_cast<double>(total);
  const double nearest = std::round(v);
  if (std::fabs(v - nearest) <= 1e-9 * std::max(1.0, v)) {
    return std::min(static_cast<Area>(nearest), total);
  }
  return static_cast<Area>(std::floor(v));
}

Area pixel_budget(double r, const FrameDims& dims) {
  return pixel_budget(r, dims.area());
}

}  // namespace roilink
