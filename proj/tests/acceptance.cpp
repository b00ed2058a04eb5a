// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "roilink/bench.hpp"
#include "roilink/dataset.hpp"
#include "roilink/loopback.hpp"
#include "roilink/matching.hpp"
#include "roilink/protocol.hpp"
#include "roilink/saliency.hpp"
#include "roilink/selection.hpp"
#include "roilink/sweep.hpp"
#include "wire_gen.hpp"

#include <spdlog/spdlog.h>

using namespace roilink;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void criterion(const char* name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<RectPx> random_rects(std::mt19937_64& rng, int max_n, int w, int h) {
  std::vector<RectPx> out(std::uniform_int_distribution<int>(0, max_n)(rng));
  for (auto& r : out) r = oracle::random_rect(rng, w, h);
  return out;
}

void metric_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  int bad = 0, sets = 0;
  for (; sets < 1000; ++sets) {
    const FrameDims d{std::uniform_int_distribution<int>(1, 3840)(rng),
                      std::uniform_int_distribution<int>(1, 2160)(rng)};
    std::vector<RectPx> gts(std::uniform_int_distribution<int>(1, 50)(rng));
    for (auto& g : gts) g = oracle::random_rect(rng, d.width, d.height);
    const std::vector<RectPx> preds{d.full()};
    const auto m = match(preds, gts, {0.5, MatchMode::OneToManyIoGT});
    const auto pt = metrics(m, 1, static_cast<std::int64_t>(gts.size()), 1.0);
    if (pt.recall != 1.0) ++bad;
  }
  const double sec = seconds_since(t0);
  report("metric_limit", bad == 0 && sec < 1.0,
         std::to_string(sets) + " GT sets, " + std::to_string(bad) + " with recall != 1, " +
             std::to_string(sec) + " s");
}

void throughput() {
  const std::vector<StageTiming> s{{"saliency", 51.0}, {"detector", 30.1}};
  const double serial = compose_throughput(s, Composition::Serial);
  const double parallel = compose_throughput(s, Composition::Parallel);
  char buf[128];
  std::snprintf(buf, sizeof buf, "serial %.4f (want 18.93 +/- 0.01), parallel %.4f (want 30.1)", serial,
                parallel);
  report("throughput_composition", std::abs(serial - 18.93) <= 0.01 && parallel == 30.1, buf);
}

void oracle_equivalence() {
  std::mt19937_64 rng(102);
  int bad_iou = 0, bad_iogt = 0, bad_match = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = std::uniform_int_distribution<int>(1, 64)(rng);
    const int h = std::uniform_int_distribution<int>(1, 64)(rng);
    const auto preds = random_rects(rng, 8, w, h);
    const auto gts = random_rects(rng, 8, w, h);
    for (const auto& p : preds) {
      for (const auto& g : gts) {
        if (iou(p, g) != oracle::iou(p, g)) ++bad_iou;
        if (iogt(p, g) != oracle::iogt(p, g)) ++bad_iogt;
      }
    }
    const auto m = match_iogt(preds, gts, {0.5, MatchMode::OneToManyIoGT});
    const auto sim = oracle::iogt_loop(preds, gts, 0.5);
    if (m.matched_gt != sim.gt || m.matched_pred != sim.pred) ++bad_match;
  }
  report("iou_iogt_oracle", bad_iou + bad_iogt + bad_match == 0,
         "1000 scenes, mismatches iou " + std::to_string(bad_iou) + " iogt " + std::to_string(bad_iogt) +
             " match_iogt " + std::to_string(bad_match));
}

void selection() {
  std::mt19937_64 rng(103);
  int not_optimal = 0;
  for (int i = 0; i < 500; ++i) {
    const FrameDims d{std::uniform_int_distribution<int>(8, 48)(rng),
                      std::uniform_int_distribution<int>(8, 48)(rng)};
    ProposalSet p{d, {}};
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < n; ++k) p.boxes.push_back({oracle::random_rect(rng, d.width, d.height), std::nullopt});
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const Area budget = pixel_budget(r, d);
    const auto acc = i % 2 ? Accounting::UnionPixels : Accounting::SumOfCropAreas;
    const auto sel = select(p, r, {SelectionMode::AreaGreedy, acc, 12});
    std::vector<RectPx> full, all;
    for (auto k : sel.full) full.push_back(p.boxes[k].rect);
    for (const auto& b : p.boxes) all.push_back(b.rect);
    if (accounted_area(full, acc) != oracle::best_subset(all, budget, acc == Accounting::UnionPixels, 48)) {
      ++not_optimal;
    }
  }
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const FrameDims d{std::uniform_int_distribution<int>(1, 200)(rng),
                      std::uniform_int_distribution<int>(1, 200)(rng)};
    ProposalSet p{d, {}};
    const int n = std::uniform_int_distribution<int>(0, 16)(rng);
    for (int k = 0; k < n; ++k) p.boxes.push_back({oracle::random_rect(rng, d.width, d.height), 0.5});
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto acc = i % 2 ? Accounting::UnionPixels : Accounting::SumOfCropAreas;
    const auto mode = i % 4 < 2 ? SelectionMode::AreaGreedy : SelectionMode::ConfidencePrefix;
    const auto rects = select(p, r, {mode, acc, {}}).rects(p);
    bool ok = accounted_area(rects, acc) <= pixel_budget(r, d);
    for (const auto& rc : rects) ok = ok && d.contains(rc);
    if (!ok) ++violations;
  }
  report("selection_optimality", not_optimal == 0 && violations == 0,
         "exact small-n off-optimum " + std::to_string(not_optimal) + "/500, budget violations " +
             std::to_string(violations) + "/100000");
}

void monotone_recall() {
  std::mt19937_64 rng(104);
  SweepConfig cfg;
  cfg.policy = {SelectionMode::ConfidencePrefix, Accounting::UnionPixels, {}};
  cfg.threads = 1;
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto s = fixture::random_scored(rng, 6, 64, 8);
    const auto pts = sweep(s.dataset, s.proposals, cfg);
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (pts[k].recall < pts[k - 1].recall) ++violations;
    }
  }
  report("monotone_recall", violations == 0,
         "100 datasets x " + std::to_string(cfg.r_grid.size()) + " grid points, violations " +
             std::to_string(violations));
}

void expansion() {
  std::mt19937_64 rng(105);
  const FrameDims frame{3840, 2160};
  int bad = 0;
  std::size_t boxes = 0;
  bool idempotent = true;
  for (int n = 0; n < 20; ++n) {
    Dataset ds;
    for (int id = 0; id < 25; ++id) {
      ds.images.push_back({id, {}, frame});
      auto& set = ds.annotations[id];
      set.frame = frame;
      for (int k = std::uniform_int_distribution<int>(0, 30)(rng); k > 0; --k) {
        set.boxes.push_back(oracle::random_rect(rng, frame.width, frame.height));
      }
    }
    const Dataset once = expand_min_size(ds);
    idempotent = idempotent && expand_min_size(once) == once;
    for (const auto& [id, set] : once.annotations) {
      for (std::size_t k = 0; k < set.boxes.size(); ++k) {
        const RectPx& b = set.boxes[k];
        const RectPx& s = ds.annotations.at(id).boxes[k];
        ++boxes;
        const bool ok = b.w >= 500 && b.h >= 500 && frame.contains(b) && 2 * b.x <= 2 * s.x + s.w &&
                        2 * b.right() >= 2 * s.x + s.w && 2 * b.y <= 2 * s.y + s.h &&
                        2 * b.bottom() >= 2 * s.y + s.h;
        if (!ok) ++bad;
      }
    }
  }
  report("expansion_transform", bad == 0 && idempotent,
         std::to_string(boxes) + " boxes, property failures " + std::to_string(bad) + ", idempotent " +
             (idempotent ? "yes" : "no"));
}

void saliency() {
  std::mt19937_64 rng(106);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const FrameDims d{std::uniform_int_distribution<int>(1, 32)(rng),
                      std::uniform_int_distribution<int>(1, 32)(rng)};
    const double density = std::uniform_real_distribution<double>(0.05, 0.7)(rng);
    BinaryMap map(d);
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x) map.set(x, y, std::bernoulli_distribution(density)(rng));
    const bool eight = i % 2 == 0;
    auto got = component_boxes(map, eight ? Connectivity::Eight : Connectivity::Four);
    const auto comps = oracle::flood_fill(map, eight);
    std::vector<RectPx> want;
    for (const auto& c : comps) want.push_back(c.box);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    bool covered = true;
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x)
        if (map.at(x, y) && std::none_of(got.begin(), got.end(),
                                         [&](const RectPx& r) { return r.contains(RectPx{x, y, 1, 1}); }))
          covered = false;
    if (got != want || !covered) ++mismatches;
  }
  report("component_boxes_oracle", mismatches == 0, "1000 maps, mismatches " + std::to_string(mismatches));
}

void protocol() {
  std::mt19937_64 rng(107);
  int round_trip_bad = 0;
  std::set<int> types;
  for (int i = 0; i < 100000; ++i) {
    const auto m = wiregen::random_message(rng);
    types.insert(static_cast<int>(wire::type_of(m)));
    if (wire::decode(wire::encode(m)) != m) ++round_trip_bad;
  }
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int i = 0; i < 256; ++i) seeds.push_back(wire::encode(wiregen::random_message(rng)));
  std::size_t parsed = 0, rejected = 0, inconsistent = 0;
  for (int i = 0; i < 1000000; ++i) {
    std::vector<std::uint8_t> in;
    if (i % 2) {
      in = wiregen::bytes(rng, rng() % 48);
    } else {
      in = seeds[rng() % seeds.size()];
      for (int f = 1 + static_cast<int>(rng() % 4); f > 0 && !in.empty(); --f) in[rng() % in.size()] ^= 1u << (rng() % 8);
      if (rng() % 4 == 0) in.resize(rng() % (in.size() + 1));
    }
    const auto out = wire::try_decode(in);
    if (out.message.has_value() == out.error.has_value() || out.consumed > in.size()) ++inconsistent;
    out.message ? ++parsed : ++rejected;
  }

  LoopbackConfig cfg;
  cfg.frames = 100;
  cfg.r = 0.2;
  cfg.seed = 7;
  const auto rep = run_loopback(cfg);
  int over = 0, not_exact = 0;
  for (const auto& f : rep.frames) {
    if (accounted_area(f.sent.tiles, cfg.session.policy.accounting) > pixel_budget(cfg.r, cfg.session.dims)) ++over;
    if (f.received.image != oracle::reference_composite(f.source, f.sent.tiles, cfg.session.downscale)) ++not_exact;
  }
  const bool ok = round_trip_bad == 0 && types.size() == 8 && inconsistent == 0 && over == 0 &&
                  not_exact == 0 && rep.frames.size() == 100 && rep.violations == 0 && rep.protocol_errors == 0;
  report("protocol", ok,
         "round-trip failures " + std::to_string(round_trip_bad) + "/100000 over " +
             std::to_string(types.size()) + " types; fuzz 1000000 inputs (" + std::to_string(parsed) +
             " parsed, " + std::to_string(rejected) + " rejected, " + std::to_string(inconsistent) +
             " inconsistent); loopback " + std::to_string(rep.frames.size()) + " frames 64x64, over budget " +
             std::to_string(over) + ", composite mismatches " + std::to_string(not_exact));
}

void end_to_end() {
  const fs::path dir = fs::temp_directory_path() / "roilink_acceptance_e2e";
  fs::remove_all(dir);
  LoopbackConfig cfg;
  cfg.frames = 10;
  cfg.r = 0.2;
  cfg.seed = 11;
  cfg.plugin = PluginSpec{ROILINK_ECHO_DETECTOR};
  cfg.record_dir = dir / "record";
  const std::uint64_t request_id = 1001;
  cfg.inject[3] = {{request_id, {10, 10, 8, 8}, false}};
  const auto rep = run_loopback(cfg);

  std::uint64_t seen_at = 0;
  for (const auto& f : rep.frames) {
    for (const auto& roi : f.received.rois) {
      if (roi.origin == wire::RoiOrigin::OperatorRequested && roi.request_id == request_id && seen_at == 0) {
        seen_at = f.received.meta.frame_id;
      }
    }
  }

  // Detector output against the scene objects, as a metrics CSV.
  MetricCounts pooled;
  std::size_t detections = 0;
  for (const auto& f : rep.frames) {
    std::vector<RectPx> preds;
    for (const auto& d : f.received.detections) preds.push_back(d.rect);
    detections += preds.size();
    const auto m = match(preds, f.objects, {});
    pooled += {static_cast<std::int64_t>(preds.size()), static_cast<std::int64_t>(f.objects.size()),
               static_cast<std::int64_t>(m.matched_gt.size()), static_cast<std::int64_t>(m.matched_pred.size())};
  }
  const std::vector<MetricsPoint> pts{metrics(pooled, cfg.r)};
  write_metrics_csv(pts, dir / "metrics.csv");

  std::ifstream session(dir / "record" / "session.csv");
  std::size_t session_rows = 0;
  for (std::string l; std::getline(session, l);) ++session_rows;
  const bool csv_ok = session_rows == 11 && fs::file_size(dir / "metrics.csv") > 0;
  const bool ok = rep.frames.size() == 10 && csv_ok && seen_at != 0 && seen_at <= 4 && detections > 0 &&
                  rep.violations == 0;
  report("end_to_end_loopback", ok,
         std::to_string(rep.frames.size()) + " frames, " + std::to_string(detections) +
             " echo detections, session.csv rows " + std::to_string(session_rows - (session_rows > 0)) +
             ", request from frame 3 first tiled at frame " + std::to_string(seen_at));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  criterion("metric_limit", metric_limit);
  criterion("throughput_composition", throughput);
  criterion("iou_iogt_oracle", oracle_equivalence);
  criterion("selection_optimality", selection);
  criterion("monotone_recall", monotone_recall);
  criterion("expansion_transform", expansion);
  criterion("component_boxes_oracle", saliency);
  criterion("protocol", protocol);
  criterion("end_to_end_loopback", end_to_end);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
