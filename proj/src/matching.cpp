#include "roilink/matching.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "roilink/error.hpp"

namespace roilink {

MatchResult match_one_to_one(std::span<const RectPx> preds,
                             std::span<const RectPx> gts, const MatchConfig& cfg) {
  struct Candidate {
    double score;
    std::size_t pred;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < preds.size(); ++j) {
    for (std::size_t k = 0; k < gts.size(); ++k) {
      const double s = iou(preds[j], gts[k]);
      if (s >= cfg.threshold && s > 0.0) candidates.push_back({s, j, k});
    }
  }
  // Taking candidates in this order and skipping used indices is the same as
  // repeatedly extracting the maximum over the unmatched pairs.
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
            });
  MatchResult result;
  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = true;
    gt_used[c.gt] = true;
    result.pairs.emplace_back(c.pred, c.gt);
    result.matched_pred.insert(c.pred);
    result.matched_gt.insert(c.gt);
  }
  return result;
}

MatchResult match_iogt(std::span<const RectPx> preds, std::span<const RectPx> gts,
                       const MatchConfig& cfg) {
  for (std::size_t k = 0; k < gts.size(); ++k) {
    if (gts[k].empty()) {
      throw GeometryError("degenerate ground truth at index " + std::to_string(k));
    }
  }
  MatchResult result;
  for (std::size_t j = 0; j < preds.size(); ++j) {
    for (std::size_t k = 0; k < gts.size(); ++k) {
      const double s = iogt(preds[j], gts[k]);
      if (s >= cfg.threshold && s > 0.0) {
        result.pairs.emplace_back(j, k);
        result.matched_pred.insert(j);
        result.matched_gt.insert(k);
      }
    }
  }
  return result;
}

MatchResult match(std::span<const RectPx> preds, std::span<const RectPx> gts,
                  const MatchConfig& cfg) {
  return cfg.mode == MatchMode::OneToOneIoU ? match_one_to_one(preds, gts, cfg)
                                            : match_iogt(preds, gts, cfg);
}

namespace {

Fraction reduced(std::int64_t num, std::int64_t den) {
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

}  // namespace

Fraction MetricCounts::recall() const {
  if (n_gt == 0) return {1, 1};
  return reduced(tp_gt, n_gt);
}

Fraction MetricCounts::precision() const {
  if (n_pred == 0) return n_gt == 0 ? Fraction{1, 1} : Fraction{0, 1};
  return reduced(matched_pred, n_pred);
}

Fraction MetricCounts::f1() const {
  // P = a/b, R = c/d  =>  2PR/(P+R) = 2ac / (ad + cb).
  const Fraction p = precision();
  const Fraction r = recall();
  const std::int64_t num = 2 * p.num * r.num;
  const std::int64_t den = p.num * r.den + r.num * p.den;
  if (den == 0) return {0, 1};
  return reduced(num, den);
}

MetricsPoint metrics(const MetricCounts& counts, double r) {
  MetricsPoint m;
  m.r = r;
  m.precision = counts.precision().value();
  m.recall = counts.recall().value();
  m.f1 = counts.f1().value();
  m.n_pred = counts.n_pred;
  m.n_gt = counts.n_gt;
  m.tp_gt = counts.tp_gt;
  m.matched_pred = counts.matched_pred;
  return m;
}

MetricsPoint metrics(const MatchResult& result, std::int64_t n_pred,
                     std::int64_t n_gt, double r) {
  return metrics(MetricCounts{n_pred, n_gt,
                              static_cast<std::int64_t>(result.matched_gt.size()),
                              static_cast<std::int64_t>(result.matched_pred.size())},
                 r);
}

}  // namespace roilink
