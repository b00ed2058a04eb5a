#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>

namespace roilink {

using Area = std::int64_t;

/// Axis-aligned rectangle in integer pixels. Covers exactly w*h pixels:
/// columns [x, x+w) and rows [y, y+h).
struct RectPx {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  constexpr Area area() const noexcept {
    return empty() ? 0 : static_cast<Area>(w) * static_cast<Area>(h);
  }
  constexpr bool empty() const noexcept { return w <= 0 || h <= 0; }
  constexpr int right() const noexcept { return x + w; }
  constexpr int bottom() const noexcept { return y + h; }

  /// True if every pixel of `inner` is a pixel of this rect. Empty rects are
  /// contained in everything.
  constexpr bool contains(const RectPx& inner) const noexcept {
    if (inner.empty()) return true;
    return inner.x >= x && inner.y >= y && inner.right() <= right() &&
           inner.bottom() <= bottom();
  }

  friend constexpr auto operator<=>(const RectPx&, const RectPx&) = default;
};

std::ostream& operator<<(std::ostream& os, const RectPx& r);

struct FrameDims {
  int width = 1;
  int height = 1;

  constexpr Area area() const noexcept {
    return static_cast<Area>(width) * static_cast<Area>(height);
  }
  constexpr RectPx full() const noexcept { return {0, 0, width, height}; }
  constexpr bool contains(const RectPx& r) const noexcept {
    return r.w >= 0 && r.h >= 0 && r.x >= 0 && r.y >= 0 &&
           r.right() <= width && r.bottom() <= height;
  }
  /// Throws GeometryError unless width >= 1 and height >= 1.
  void validate() const;

  friend constexpr bool operator==(const FrameDims&, const FrameDims&) = default;
};

/// A real value in [0, 1]. Construction outside that range throws ConfigError.
class Ratio {
 public:
  constexpr Ratio() = default;
  explicit Ratio(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

RectPx intersect(const RectPx& a, const RectPx& b) noexcept;

/// area(a ∩ b) / area(a ∪ b); 0 when both are empty.
double iou(const RectPx& a, const RectPx& b) noexcept;

/// area(p ∩ g) / area(g). Throws GeometryError("degenerate ground truth")
/// when g is empty.
double iogt(const RectPx& p, const RectPx& g);

/// Exact pixel count of the union (coordinate-compression sweep).
Area union_area(std::span<const RectPx> boxes);

/// Largest same-center, same-aspect rect inside `src` with area <= max_area.
/// Returns `src` when it already fits and an empty rect when nothing does.
RectPx concentric_fit(const RectPx& src, Area max_area);

/// Largest member of the nested concentric family of `src` that satisfies
/// `accept`. `accept` must be monotone: if it holds for a member it holds for
/// every smaller one. Returns an empty rect if no nonempty member qualifies.
RectPx concentric_fit_if(const RectPx& src,
                         const std::function<bool(const RectPx&)>& accept);

/// Member k of the concentric family: major dimension k, minor dimension
/// floor(k * minor / major), centered in `src` with a top-left bias.
RectPx concentric_member(const RectPx& src, int major_extent);

/// floor(r * W * H), snapping values within 1e-9 relative of an integer up to
/// that integer so decimal portions like 0.29 of 100 px give 29, not 28.
Area pixel_budget(double r, const FrameDims& dims);
Area pixel_budget(double r, Area total);

}  // namespace roilink
