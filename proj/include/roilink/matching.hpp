#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "roilink/geometry.hpp"

namespace roilink {

enum class MatchMode { OneToOneIoU, OneToManyIoGT };

struct MatchConfig {
  double threshold = 0.5;
  MatchMode mode = MatchMode::OneToManyIoGT;
};

struct MatchResult {
  std::set<std::size_t> matched_gt;
  std::set<std::size_t> matched_pred;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt)

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Classic greedy matching: repeatedly link the globally best unmatched
/// (pred, gt) pair with IoU >= threshold. Ties go to the lower pred index,
/// then the lower gt index.
MatchResult match_one_to_one(std::span<const RectPx> preds,
                             std::span<const RectPx> gts, const MatchConfig& cfg);

/// One-to-many matching on IoGT: every pair with IoGT >= threshold counts,
/// whether or not either side is already matched. Throws GeometryError for a
/// zero-area ground-truth box.
MatchResult match_iogt(std::span<const RectPx> preds, std::span<const RectPx> gts,
                       const MatchConfig& cfg);

/// Dispatches on cfg.mode.
MatchResult match(std::span<const RectPx> preds, std::span<const RectPx> gts,
                  const MatchConfig& cfg);

/// Exact non-negative fraction.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  friend bool operator==(const Fraction& a, const Fraction& b) noexcept {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
};

struct MetricsPoint {
  double r = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t n_pred = 0;
  std::int64_t n_gt = 0;
  std::int64_t tp_gt = 0;
  std::int64_t matched_pred = 0;
};

/// Count-level metrics. recall = tp_gt / n_gt (1 when n_gt = 0);
/// precision = matched_pred / n_pred (1 when both counts are 0, 0 when only
/// n_pred is 0); f1 is the harmonic mean or 0 when P + R = 0.
struct MetricCounts {
  std::int64_t n_pred = 0;
  std::int64_t n_gt = 0;
  std::int64_t tp_gt = 0;
  std::int64_t matched_pred = 0;

  Fraction precision() const;
  Fraction recall() const;
  Fraction f1() const;

  MetricCounts& operator+=(const MetricCounts& o) noexcept {
    n_pred += o.n_pred;
    n_gt += o.n_gt;
    tp_gt += o.tp_gt;
    matched_pred += o.matched_pred;
    return *this;
  }
};

MetricsPoint metrics(const MetricCounts& counts, double r);
MetricsPoint metrics(const MatchResult& result, std::int64_t n_pred,
                     std::int64_t n_gt, double r);

}  // namespace roilink
