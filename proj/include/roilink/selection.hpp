#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "roilink/geometry.hpp"

namespace roilink {

struct ScoredBox {
  RectPx rect;
  std::optional<double> confidence;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

/// The candidate boxes for one frame.
struct ProposalSet {
  FrameDims frame;
  std::vector<ScoredBox> boxes;

  /// Throws GeometryError for out-of-frame rects and ConfigError for
  /// confidences outside [0,1].
  void validate() const;

  friend bool operator==(const ProposalSet&, const ProposalSet&) = default;
};

enum class SelectionMode { AreaGreedy, ConfidencePrefix };
enum class Accounting { UnionPixels, SumOfCropAreas };

struct SelectionPolicy {
  SelectionMode mode = SelectionMode::AreaGreedy;
  Accounting accounting = Accounting::UnionPixels;
  // When set and the proposal count is at most this, AreaGreedy is replaced
  // by exhaustive subset enumeration. At most 20.
  std::optional<int> exact_small_n;

  void validate() const;
};

/// Pixels charged against the budget for `rects` under `accounting`.
Area accounted_area(std::span<const RectPx> rects, Accounting accounting);

struct ShrunkBox {
  std::size_t source = 0;  // index into ProposalSet::boxes
  RectPx rect;
};

struct Selection {
  Area budget = 0;
  std::vector<std::size_t> full;  // indices into ProposalSet::boxes, in pick order
  std::optional<ShrunkBox> shrunk;

  /// The transmitted rects: full picks in order, then the shrunk box.
  std::vector<RectPx> rects(const ProposalSet& proposals) const;
};

/// Applies the bandwidth portion r to a proposal set.
///
/// The budget is floor(r * W * H) pixels. AreaGreedy scans boxes by
/// descending area and keeps every box that still fits; ConfidencePrefix
/// takes boxes by descending confidence and stops at the first that does not
/// fit. Either way one further box (the largest unselected one, or the
/// stopping box) is shrunk concentrically into the leftover budget and
/// appended if nonempty.
///
/// Throws SelectionError if ConfidencePrefix meets an unscored box, and
/// ConfigError for r outside [0,1].
Selection select(const ProposalSet& proposals, double r,
                 const SelectionPolicy& policy);

/// Same as select() with an explicit pixel budget and rects already committed
/// (operator requests). Committed rects are charged first; the returned
/// selection never includes them.
Selection select_with_budget(const ProposalSet& proposals, Area budget,
                             const SelectionPolicy& policy,
                             std::span<const RectPx> committed = {});

}  // namespace roilink
