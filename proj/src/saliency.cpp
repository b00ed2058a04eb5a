#include "roilink/saliency.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <string>

#include "roilink/error.hpp"

namespace roilink {

Heatmap::Heatmap(FrameDims dims, std::vector<float> values)
    : dims_(dims), values_(std::move(values)) {
  dims_.validate();
  if (values_.size() != static_cast<std::size_t>(dims_.area())) {
    throw GeometryError("heatmap has " + std::to_string(values_.size()) +
                        " values for " + std::to_string(dims_.area()) +
                        " pixels");
  }
  for (float v : values_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ConfigError("heatmap value outside [0,1]: " + std::to_string(v));
    }
  }
}

Heatmap::Heatmap(FrameDims dims, float fill)
    : Heatmap(dims, std::vector<float>(
                        static_cast<std::size_t>(std::max<Area>(dims.area(), 0)),
                        fill)) {}

BinaryMap::BinaryMap(FrameDims dims)
    : dims_(dims),
      bits_(static_cast<std::size_t>(std::max<Area>(dims.area(), 0)), 0) {
  dims_.validate();
}

BinaryMap::BinaryMap(FrameDims dims, std::vector<std::uint8_t> bits)
    : dims_(dims), bits_(std::move(bits)) {
  dims_.validate();
  if (bits_.size() != static_cast<std::size_t>(dims_.area())) {
    throw GeometryError("binary map size does not match its dims");
  }
  if (std::any_of(bits_.begin(), bits_.end(),
                  [](std::uint8_t b) { return b > 1; })) {
    throw ConfigError("binary map bits must be 0 or 1");
  }
}

BinaryMap binarize(const Heatmap& heatmap, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("binarize threshold outside [0,1]: " +
                      std::to_string(threshold));
  }
  std::vector<std::uint8_t> bits(heatmap.values().size());
  std::transform(heatmap.values().begin(), heatmap.values().end(),
                 bits.begin(), [threshold](float v) {
                   return static_cast<std::uint8_t>(
                       static_cast<double>(v) >= threshold ? 1 : 0);
                 });
  return BinaryMap(heatmap.dims(), std::move(bits));
}

namespace {

// Union-find over provisional labels; parent[i] <= i keeps roots minimal.
struct LabelForest {
  std::vector<std::int32_t> parent;

  std::int32_t make() {
    const auto id = static_cast<std::int32_t>(parent.size());
    parent.push_back(id);
    return id;
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
  }
};

struct Extent {
  int x0, y0, x1, y1;
};

}  // namespace

std::vector<RectPx> component_boxes(const BinaryMap& map,
                                    Connectivity connectivity) {
  const int width = map.dims().width;
  const int height = map.dims().height;
  const bool eight = connectivity == Connectivity::Eight;
  constexpr std::int32_t kNone = -1;

  std::vector<std::int32_t> labels(map.bits().size(), kNone);
  LabelForest forest;
  auto label_at = [&](int x, int y) {
    return labels[static_cast<std::size_t>(y) * width + x];
  };

  // First pass: provisional labels from already-visited neighbours.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!map.at(x, y)) continue;
      std::int32_t current = kNone;
      auto consider = [&](int nx, int ny) {
        if (nx < 0 || nx >= width || ny < 0) return;
        const std::int32_t n = label_at(nx, ny);
        if (n == kNone) return;
        if (current == kNone) {
          current = n;
        } else {
          forest.unite(current, n);
        }
      };
      consider(x - 1, y);
      consider(x, y - 1);
      if (eight) {
        consider(x - 1, y - 1);
        consider(x + 1, y - 1);
      }
      if (current == kNone) current = forest.make();
      labels[static_cast<std::size_t>(y) * width + x] = current;
    }
  }

  // Second pass: accumulate extents per root.
  std::vector<std::int32_t> root_slot(forest.parent.size(), kNone);
  std::vector<Extent> extents;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::int32_t l = label_at(x, y);
      if (l == kNone) continue;
      const std::int32_t root = forest.find(l);
      std::int32_t& slot = root_slot[root];
      if (slot == kNone) {
        slot = static_cast<std::int32_t>(extents.size());
        extents.push_back({x, y, x, y});
      } else {
        Extent& e = extents[slot];
        e.x0 = std::min(e.x0, x);
        e.x1 = std::max(e.x1, x);
        e.y1 = std::max(e.y1, y);
      }
    }
  }

  std::vector<RectPx> boxes;
  boxes.reserve(extents.size());
  for (const auto& e : extents) {
    boxes.push_back({e.x0, e.y0, e.x1 - e.x0 + 1, e.y1 - e.y0 + 1});
  }
  std::sort(boxes.begin(), boxes.end(), [](const RectPx& a, const RectPx& b) {
    if (a.area() != b.area()) return a.area() > b.area();
    return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
  });
  return boxes;
}

ProposalSet propose_from_heatmap(const Heatmap& heatmap,
                                 const ProposalOptions& options) {
  const BinaryMap map = binarize(heatmap, options.threshold);
  ProposalSet set;
  set.frame = heatmap.dims();
  for (const RectPx& r : component_boxes(map, options.connectivity)) {
    if (r.area() < options.min_area) continue;
    set.boxes.push_back({r, std::nullopt});
  }
  return set;
}

}  // namespace roilink
