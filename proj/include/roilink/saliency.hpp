#pragma once

#include <cstdint>
#include <vector>

#include "roilink/geometry.hpp"
#include "roilink/selection.hpp"

namespace roilink {

/// Per-pixel saliency in [0,1], row-major.
class Heatmap {
 public:
  Heatmap() = default;
  /// Throws GeometryError on a size mismatch and ConfigError on values
  /// outside [0,1].
  Heatmap(FrameDims dims, std::vector<float> values);
  /// Uniform heatmap.
  Heatmap(FrameDims dims, float fill);

  const FrameDims& dims() const noexcept { return dims_; }
  const std::vector<float>& values() const noexcept { return values_; }
  float at(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * dims_.width + x];
  }

 private:
  FrameDims dims_;
  std::vector<float> values_;
};

class BinaryMap {
 public:
  BinaryMap() = default;
  explicit BinaryMap(FrameDims dims);
  /// Bits must be 0 or 1; throws otherwise.
  BinaryMap(FrameDims dims, std::vector<std::uint8_t> bits);

  const FrameDims& dims() const noexcept { return dims_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  bool at(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * dims_.width + x] != 0;
  }
  void set(int x, int y, bool on) noexcept {
    bits_[static_cast<std::size_t>(y) * dims_.width + x] = on ? 1 : 0;
  }

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;

 private:
  FrameDims dims_;
  std::vector<std::uint8_t> bits_;
};

enum class Connectivity { Four = 4, Eight = 8 };

struct ProposalOptions {
  double threshold = 0.5;
  Connectivity connectivity = Connectivity::Eight;
  // Components with fewer pixels than this in their bounding box are dropped.
  Area min_area = 0;
};

/// bit = 1 iff value >= threshold. Throws ConfigError if threshold is
/// outside [0,1].
BinaryMap binarize(const Heatmap& heatmap, double threshold = 0.5);

/// One tight box per connected component of 1-pixels, sorted by area
/// descending, ties by (y, x) ascending.
std::vector<RectPx> component_boxes(const BinaryMap& map,
                                    Connectivity connectivity = Connectivity::Eight);

/// binarize followed by component_boxes. Boxes carry no confidence.
ProposalSet propose_from_heatmap(const Heatmap& heatmap,
                                 const ProposalOptions& options = {});

}  // namespace roilink
