#include "roilink/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "roilink/error.hpp"

namespace roilink {

void ProposalSet::validate() const {
  frame.validate();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (!frame.contains(b.rect)) {
      throw GeometryError("proposal " + std::to_string(i) +
                          " lies outside the frame");
    }
    if (b.confidence && !(*b.confidence >= 0.0 && *b.confidence <= 1.0)) {
      throw ConfigError("proposal " + std::to_string(i) +
                        " has confidence outside [0,1]");
    }
  }
}

void SelectionPolicy::validate() const {
  if (exact_small_n && (*exact_small_n < 0 || *exact_small_n > 20)) {
    throw ConfigError("exact_small_n must be in [0,20]");
  }
}

Area accounted_area(std::span<const RectPx> rects, Accounting accounting) {
  if (accounting == Accounting::UnionPixels) return union_area(rects);
  Area sum = 0;
  for (const auto& r : rects) sum += r.area();
  return sum;
}

std::vector<RectPx> Selection::rects(const ProposalSet& proposals) const {
  std::vector<RectPx> out;
  out.reserve(full.size() + 1);
  for (std::size_t i : full) out.push_back(proposals.boxes[i].rect);
  if (shrunk) out.push_back(shrunk->rect);
  return out;
}

namespace {

bool geometry_less(const RectPx& a, const RectPx& b) {
  return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
}

std::vector<std::size_t> area_order(const ProposalSet& p) {
  std::vector<std::size_t> order(p.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const RectPx& ra = p.boxes[a].rect;
    const RectPx& rb = p.boxes[b].rect;
    if (ra.area() != rb.area()) return ra.area() > rb.area();
    return geometry_less(ra, rb);
  });
  return order;
}

std::vector<std::size_t> confidence_order(const ProposalSet& p) {
  std::vector<std::size_t> order(p.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = *p.boxes[a].confidence;
    const double cb = *p.boxes[b].confidence;
    if (ca != cb) return ca > cb;
    return geometry_less(p.boxes[a].rect, p.boxes[b].rect);
  });
  return order;
}

// Tracks the committed rects and answers "does this still fit".
class BudgetLedger {
 public:
  BudgetLedger(Area budget, Accounting accounting, std::span<const RectPx> committed)
      : budget_(budget), accounting_(accounting),
        chosen_(committed.begin(), committed.end()) {}

  bool fits(const RectPx& r) {
    chosen_.push_back(r);
    const bool ok = accounted_area(chosen_, accounting_) <= budget_;
    chosen_.pop_back();
    return ok;
  }
  void add(const RectPx& r) { chosen_.push_back(r); }

  // Largest concentric shrink of `src` whose marginal charge still fits.
  RectPx shrink(const RectPx& src) {
    return concentric_fit_if(src, [this](const RectPx& m) { return fits(m); });
  }

 private:
  Area budget_;
  Accounting accounting_;
  std::vector<RectPx> chosen_;
};

void append_shrunk(Selection& sel, BudgetLedger& ledger, const ProposalSet& p,
                   std::size_t source) {
  const RectPx fitted = ledger.shrink(p.boxes[source].rect);
  if (!fitted.empty()) sel.shrunk = ShrunkBox{source, fitted};
}

std::optional<std::size_t> largest_unselected(const std::vector<std::size_t>& order,
                                              const std::vector<bool>& picked) {
  for (std::size_t i : order) {
    if (!picked[i]) return i;
  }
  return std::nullopt;
}

Selection area_greedy(const ProposalSet& p, Area budget, Accounting accounting,
                      std::span<const RectPx> committed) {
  Selection sel;
  sel.budget = budget;
  BudgetLedger ledger(budget, accounting, committed);
  const auto order = area_order(p);
  std::vector<bool> picked(p.boxes.size(), false);
  for (std::size_t i : order) {
    if (ledger.fits(p.boxes[i].rect)) {
      ledger.add(p.boxes[i].rect);
      sel.full.push_back(i);
      picked[i] = true;
    }
  }
  if (auto next = largest_unselected(order, picked)) {
    append_shrunk(sel, ledger, p, *next);
  }
  return sel;
}

Selection area_exhaustive(const ProposalSet& p, Area budget, Accounting accounting,
                          std::span<const RectPx> committed) {
  Selection sel;
  sel.budget = budget;
  const auto order = area_order(p);
  const std::size_t n = order.size();

  std::vector<RectPx> scratch(committed.begin(), committed.end());
  const std::size_t base = scratch.size();
  Area committed_sum = 0;
  for (const auto& r : committed) committed_sum += r.area();

  Area best = -1;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    // The union never exceeds the plain sum, so a sum at or below the best
    // cannot improve on it.
    Area upper = committed_sum;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) upper += p.boxes[order[k]].rect.area();
    }
    if (upper <= best) continue;
    scratch.resize(base);
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) scratch.push_back(p.boxes[order[k]].rect);
    }
    const Area charged = accounted_area(scratch, accounting);
    if (charged <= budget && charged > best) {
      best = charged;
      best_mask = mask;
    }
  }

  BudgetLedger ledger(budget, accounting, committed);
  std::vector<bool> picked(p.boxes.size(), false);
  if (best >= 0) {
    for (std::size_t k = 0; k < n; ++k) {
      if (best_mask & (1u << k)) {
        ledger.add(p.boxes[order[k]].rect);
        sel.full.push_back(order[k]);
        picked[order[k]] = true;
      }
    }
  }
  if (auto next = largest_unselected(order, picked)) {
    append_shrunk(sel, ledger, p, *next);
  }
  return sel;
}

Selection confidence_prefix(const ProposalSet& p, Area budget, Accounting accounting,
                            std::span<const RectPx> committed) {
  Selection sel;
  sel.budget = budget;
  BudgetLedger ledger(budget, accounting, committed);
  for (std::size_t i : confidence_order(p)) {
    if (ledger.fits(p.boxes[i].rect)) {
      ledger.add(p.boxes[i].rect);
      sel.full.push_back(i);
      continue;
    }
    append_shrunk(sel, ledger, p, i);
    break;
  }
  return sel;
}

}  // namespace

Selection select_with_budget(const ProposalSet& proposals, Area budget,
                             const SelectionPolicy& policy,
                             std::span<const RectPx> committed) {
  policy.validate();
  if (budget < 0) throw ConfigError("negative pixel budget");
  if (policy.mode == SelectionMode::ConfidencePrefix) {
    for (std::size_t i = 0; i < proposals.boxes.size(); ++i) {
      if (!proposals.boxes[i].confidence) {
        throw SelectionError("confidence-prefix selection needs scored boxes; box " +
                             std::to_string(i) + " has no confidence");
      }
    }
    return confidence_prefix(proposals, budget, policy.accounting, committed);
  }
  if (policy.exact_small_n &&
      proposals.boxes.size() <= static_cast<std::size_t>(*policy.exact_small_n)) {
    return area_exhaustive(proposals, budget, policy.accounting, committed);
  }
  return area_greedy(proposals, budget, policy.accounting, committed);
}

Selection select(const ProposalSet& proposals, double r,
                 const SelectionPolicy& policy) {
  return select_with_budget(proposals, pixel_budget(r, proposals.frame), policy);
}

}  // namespace roilink
