#include "roilink/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "roilink/error.hpp"

namespace roilink {

namespace {

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError("bad number '" + s + "' in grid");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  for (const auto& part : split(spec, ',')) {
    const auto f = split(part, ':');
    if (f.size() == 1) {
      out.push_back(parse_real(f[0]));
      continue;
    }
    if (f.size() != 4 || (f[0] != "log" && f[0] != "lin")) {
      throw ConfigError("bad grid part '" + part + "'");
    }
    const double a = parse_real(f[1]), b = parse_real(f[2]);
    const double n_real = parse_real(f[3]);
    const int n = static_cast<int>(n_real);
    if (n < 1 || n != n_real) throw ConfigError("grid point count must be a positive integer");
    if (f[0] == "log" && !(a > 0 && b > 0)) throw ConfigError("log grid needs positive bounds");
    for (int k = 0; k < n; ++k) {
      const double t = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
      double v = f[0] == "log" ? std::pow(10.0, std::log10(a) + t * (std::log10(b) - std::log10(a)))
                               : a + t * (b - a);
      if (k == 0) v = a;
      if (k == n - 1 && n > 1) v = b;
      out.push_back(v);
    }
  }
  if (out.empty()) throw ConfigError("empty grid");
  for (double v : out) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("grid value outside [0,1]");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MetricsPoint> sweep(const Dataset& ds, const std::map<std::int64_t, ProposalSet>& proposals,
                                const SweepConfig& cfg) {
  if (cfg.r_grid.empty()) throw ConfigError("empty grid");
  if (!std::is_sorted(cfg.r_grid.begin(), cfg.r_grid.end())) throw ConfigError("grid not ascending");
  std::string missing;
  for (const auto& img : ds.images) {
    if (!proposals.contains(img.id)) missing += (missing.empty() ? "" : ", ") + std::to_string(img.id);
  }
  if (!missing.empty()) throw Error("no proposals for image ids: " + missing);

  const std::size_t n_img = ds.images.size(), n_r = cfg.r_grid.size();
  std::vector<MetricCounts> counts(n_img * n_r);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n_img;) {
      try {
        const auto& img = ds.images[i];
        const ProposalSet& props = proposals.at(img.id);
        const auto it = ds.annotations.find(img.id);
        const std::vector<RectPx> empty;
        const std::vector<RectPx>& gts = it == ds.annotations.end() ? empty : it->second.boxes;
        for (std::size_t k = 0; k < n_r; ++k) {
          const auto preds = select(props, cfg.r_grid[k], cfg.policy).rects(props);
          const MatchResult m = match(preds, gts, cfg.match);
          counts[i * n_r + k] = {static_cast<std::int64_t>(preds.size()),
                                 static_cast<std::int64_t>(gts.size()),
                                 static_cast<std::int64_t>(m.matched_gt.size()),
                                 static_cast<std::int64_t>(m.matched_pred.size())};
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, std::max<std::size_t>(n_img, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::vector<MetricsPoint> out;
  for (std::size_t k = 0; k < n_r; ++k) {
    MetricCounts pooled;
    double p_sum = 0.0, r_sum = 0.0;
    for (std::size_t i = 0; i < n_img; ++i) {
      const MetricCounts& c = counts[i * n_r + k];
      pooled += c;
      p_sum += c.precision().value();
      r_sum += c.recall().value();
    }
    MetricsPoint pt = metrics(pooled, cfg.r_grid[k]);
    if (cfg.aggregation == Aggregation::Macro && n_img > 0) {
      pt.precision = p_sum / static_cast<double>(n_img);
      pt.recall = r_sum / static_cast<double>(n_img);
      const double s = pt.precision + pt.recall;
      pt.f1 = s > 0 ? 2 * pt.precision * pt.recall / s : 0.0;
    }
    out.push_back(pt);
  }
  return out;
}

void write_metrics_csv(std::span<const MetricsPoint> points, std::ostream& out) {
  out << "r,precision,recall,f1,n_pred,n_gt,tp_gt,matched_pred\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%lld,%lld,%lld,%lld\n", p.r, p.precision,
                  p.recall, p.f1, static_cast<long long>(p.n_pred), static_cast<long long>(p.n_gt),
                  static_cast<long long>(p.tp_gt), static_cast<long long>(p.matched_pred));
    out << buf;
  }
}

void write_metrics_csv(std::span<const MetricsPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_metrics_csv(points, out);
}

std::string to_string(SelectionMode m) { return m == SelectionMode::AreaGreedy ? "area" : "confidence"; }
std::string to_string(Accounting a) { return a == Accounting::UnionPixels ? "union" : "sum"; }
std::string to_string(Aggregation a) { return a == Aggregation::Micro ? "micro" : "macro"; }
std::string to_string(MatchMode m) { return m == MatchMode::OneToOneIoU ? "iou" : "iogt"; }

nlohmann::json sweep_meta(const SweepConfig& cfg) {
  nlohmann::json j{{"policy", to_string(cfg.policy.mode)},
                   {"accounting", to_string(cfg.policy.accounting)},
                   {"match", to_string(cfg.match.mode)},
                   {"match_threshold", cfg.match.threshold},
                   {"aggregation", to_string(cfg.aggregation)},
                   {"grid_points", cfg.r_grid.size()}};
  if (cfg.policy.exact_small_n) j["exact_small_n"] = *cfg.policy.exact_small_n;
  return j;
}

}  // namespace roilink
