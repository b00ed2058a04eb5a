#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roilink/dataset.hpp"
#include "roilink/matching.hpp"
#include "roilink/selection.hpp"

namespace roilink {

enum class Aggregation { Micro, Macro };

/// Grid spec: comma-separated parts, each a plain value, "log:a:b:n" (n
/// log-spaced points from a to b inclusive) or "lin:a:b:n". The result is
/// sorted and deduplicated. Throws ConfigError.
std::vector<double> parse_grid(const std::string& spec);

inline constexpr const char* kDefaultGrid = "0,log:1e-3:1:50";

struct SweepConfig {
  std::vector<double> r_grid = parse_grid(kDefaultGrid);
  SelectionPolicy policy;
  MatchConfig match;
  Aggregation aggregation = Aggregation::Micro;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Per-r metrics over the dataset. Micro pools counts over images; macro
/// averages per-image precision and recall and reports their harmonic mean
/// as f1 (the count columns stay pooled). Throws Error listing the image ids
/// that have no proposals.
std::vector<MetricsPoint> sweep(const Dataset& dataset,
                                const std::map<std::int64_t, ProposalSet>& proposals,
                                const SweepConfig& cfg);

/// Header r,precision,recall,f1,n_pred,n_gt,tp_gt,matched_pred; reals to 6
/// decimals.
void write_metrics_csv(std::span<const MetricsPoint> points, std::ostream& out);
void write_metrics_csv(std::span<const MetricsPoint> points, const std::filesystem::path& path);

/// Settings that produced a CSV, written next to it as <csv>.meta.json.
nlohmann::json sweep_meta(const SweepConfig& cfg);

std::string to_string(SelectionMode mode);
std::string to_string(Accounting accounting);
std::string to_string(Aggregation aggregation);
std::string to_string(MatchMode mode);

}  // namespace roilink
