// roilink command-line entry point.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "roilink/bench.hpp"
#include "roilink/bridge.hpp"
#include "roilink/dataset.hpp"
#include "roilink/drone.hpp"
#include "roilink/error.hpp"
#include "roilink/ground.hpp"
#include "roilink/image_io.hpp"
#include "roilink/loopback.hpp"
#include "roilink/saliency.hpp"
#include "roilink/sweep.hpp"
#include "roilink/synthetic.hpp"

namespace fs = std::filesystem;
using namespace roilink;
using nlohmann::json;

namespace {

const std::map<std::string, SelectionMode> kModes{{"area", SelectionMode::AreaGreedy},
                                                  {"confidence", SelectionMode::ConfidencePrefix}};
const std::map<std::string, Accounting> kAccounting{{"union", Accounting::UnionPixels},
                                                    {"sum", Accounting::SumOfCropAreas}};
const std::map<std::string, Aggregation> kAgg{{"micro", Aggregation::Micro}, {"macro", Aggregation::Macro}};
const std::map<std::string, MatchMode> kMatch{{"iogt", MatchMode::OneToManyIoGT},
                                              {"iou", MatchMode::OneToOneIoU}};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("roilink");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ROILINK_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("unknown ROILINK_LOG level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

FrameDims parse_dims(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    FrameDims d{std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    d.validate();
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad dims '" + s + "', expected WxH");
  }
}

struct PolicyOpts {
  std::string mode = "area";
  std::string accounting = "union";
  int exact_small_n = 0;

  void add(CLI::App* app) {
    app->add_option("--policy", mode, "selection mode")->check(CLI::IsMember({"area", "confidence"}));
    app->add_option("--accounting", accounting, "budget accounting")->check(CLI::IsMember({"union", "sum"}));
    app->add_option("--exact-small-n", exact_small_n, "exhaustive selection up to this many boxes (0 = off)");
  }
  SelectionPolicy policy() const {
    SelectionPolicy p{kModes.at(mode), kAccounting.at(accounting), {}};
    if (exact_small_n > 0) p.exact_small_n = exact_small_n;
    return p;
  }
};

std::vector<fs::path> files_with(const fs::path& dir, std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ProposalSet proposals_from_file(const fs::path& p, const ProposalOptions& opt) {
  if (p.extension() == ".pgm") {
    const BinaryMap map = read_pgm(p);
    ProposalSet out{map.dims(), {}};
    for (const auto& r : component_boxes(map, opt.connectivity)) {
      if (r.area() >= opt.min_area) out.boxes.push_back({r, std::nullopt});
    }
    return out;
  }
  return propose_from_heatmap(read_pfm(p), opt);
}

/// Heatmaps keyed by image id, matched on file stem when `images` is given.
std::map<std::int64_t, ProposalSet> proposals_from_dir(const fs::path& dir, const ProposalOptions& opt,
                                                        Dataset& images) {
  const auto files = files_with(dir, {".pfm", ".pgm"});
  std::map<std::string, std::int64_t> by_stem;
  for (const auto& img : images.images) by_stem[fs::path(img.file_name).stem().string()] = img.id;
  std::map<std::int64_t, ProposalSet> out;
  std::int64_t next_id = 1;
  for (const auto& f : files) {
    std::int64_t id;
    if (images.images.empty()) {
      id = next_id++;
    } else {
      const auto it = by_stem.find(f.stem().string());
      if (it == by_stem.end()) {
        spdlog::warn("heatmap {} matches no image; skipped", f.filename().string());
        continue;
      }
      id = it->second;
    }
    out[id] = proposals_from_file(f, opt);
    spdlog::debug("{}: {} proposals", f.filename().string(), out[id].boxes.size());
  }
  if (images.images.empty()) {
    std::int64_t id = 1;
    for (const auto& f : files) {
      images.images.push_back({id, f.filename().string(), out[id].frame});
      ++id;
    }
  }
  return out;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

int cmd_propose(const fs::path& heatmaps, const fs::path& out, const std::string& images_file,
                const ProposalOptions& opt) {
  Dataset ds;
  if (!images_file.empty()) ds = load_dataset(images_file);
  ds.detections = proposals_from_dir(heatmaps, opt, ds);
  for (const auto& img : ds.images) ds.annotations.try_emplace(img.id, AnnotationSet{img.dims, {}});
  for (auto& [id, set] : *ds.detections) set.frame = ds.find_image(id)->dims;
  write_json(detections_json(ds), out);
  std::size_t n = 0;
  for (const auto& [id, p] : *ds.detections) n += p.boxes.size();
  spdlog::info("{} proposals over {} heatmaps -> {}", n, ds.detections->size(), out.string());
  return 0;
}

int cmd_select(const fs::path& det, const fs::path& images, double r, const SelectionPolicy& pol,
               const fs::path& out) {
  Dataset ds = load_dataset(images, det);
  std::map<std::int64_t, ProposalSet> selected;
  for (const auto& [id, props] : *ds.detections) {
    const Selection sel = select(props, r, pol);
    ProposalSet s{props.frame, {}};
    for (auto k : sel.full) s.boxes.push_back(props.boxes[k]);
    if (sel.shrunk) s.boxes.push_back({sel.shrunk->rect, props.boxes[sel.shrunk->source].confidence});
    selected[id] = std::move(s);
  }
  ds.detections = std::move(selected);
  write_json(detections_json(ds), out);
  return 0;
}

int cmd_expand(const fs::path& ann, int min_w, int min_h, const fs::path& out) {
  const Dataset ds = expand_min_size(load_dataset(ann), min_w, min_h);
  write_json(annotations_json(ds), out);
  return 0;
}

int cmd_bench(const BenchConfig& cfg) {
  const BenchResult res = bench(cfg);
  std::printf("%-12s %12s\n", "stage", "fps");
  for (const auto& s : res.stages) std::printf("%-12s %12.2f\n", s.name.c_str(), s.fps);
  std::printf("%-12s %12.2f\n%-12s %12.2f\n", "serial", res.serial_fps, "parallel", res.parallel_fps);
  return 0;
}


}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"roilink: bandwidth-budgeted RoI selection, streaming and evaluation"};
  app.set_config("--config", "", "TOML file supplying any option; command-line flags win");
  app.require_subcommand(1);

  // propose
  auto* propose = app.add_subcommand("propose", "heatmaps -> proposal boxes");
  std::string heatmaps, out, images_file;
  ProposalOptions popt;
  int connectivity = 8;
  propose->add_option("--heatmaps", heatmaps, "directory of .pfm heatmaps or .pgm binary maps")->required();
  propose->add_option("--out", out, "detections JSON")->required();
  propose->add_option("--images", images_file, "annotation file whose image names the heatmaps match");
  propose->add_option("--threshold", popt.threshold)->check(CLI::Range(0.0, 1.0));
  propose->add_option("--connectivity", connectivity)->check(CLI::IsMember({4, 8}));
  propose->add_option("--min-area", popt.min_area)->check(CLI::NonNegativeNumber);

  // select
  auto* sel = app.add_subcommand("select", "apply a bandwidth portion to detections");
  std::string det_file;
  double r = 0.1;
  PolicyOpts pol;
  sel->add_option("--detections", det_file)->required();
  sel->add_option("--images", images_file, "annotation file listing the images")->required();
  sel->add_option("--r", r)->required()->check(CLI::Range(0.0, 1.0));
  sel->add_option("--out", out)->required();
  pol.add(sel);

  // expand
  auto* expand = app.add_subcommand("expand", "grow ground-truth boxes to a minimum size");
  std::string ann_file;
  int min_w = 500, min_h = 500;
  expand->add_option("--annotations", ann_file)->required();
  expand->add_option("--min-w", min_w)->check(CLI::PositiveNumber);
  expand->add_option("--min-h", min_h)->check(CLI::PositiveNumber);
  expand->add_option("--out", out)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "metrics over a grid of bandwidth portions");
  std::string grid = kDefaultGrid, agg = "micro", match_mode = "iogt";
  double match_threshold = 0.5;
  unsigned threads = 0;
  bool expand_gt = false;
  sw->add_option("--annotations", ann_file)->required();
  auto* sw_det = sw->add_option("--detections", det_file);
  auto* sw_heat = sw->add_option("--heatmaps", heatmaps, "propose from heatmaps instead of a detection file");
  sw_det->excludes(sw_heat);
  sw->add_option("--grid", grid, "e.g. 0,log:1e-3:1:50 or lin:0:1:11 or 0.1,0.2");
  sw->add_option("--agg", agg)->check(CLI::IsMember({"micro", "macro"}));
  sw->add_option("--match", match_mode)->check(CLI::IsMember({"iogt", "iou"}));
  sw->add_option("--match-threshold", match_threshold)->check(CLI::Range(0.0, 1.0));
  sw->add_option("--threads", threads, "0 = all cores");
  sw->add_flag("--expand", expand_gt, "apply the 500x500 minimum-size transform to ground truth first");
  sw->add_option("--out", out)->required();
  pol.add(sw);
  sw->add_option("--threshold", popt.threshold, "heatmap threshold")->check(CLI::Range(0.0, 1.0));

  // bench
  auto* bn = app.add_subcommand("bench", "per-stage throughput on synthetic frames");
  BenchConfig bcfg;
  std::string dims = "3840x2160", stages = "binarize,components";
  bn->add_option("--dims", dims);
  bn->add_option("--frames", bcfg.frames);
  bn->add_option("--warmup", bcfg.warmup);
  bn->add_option("--seed", bcfg.seed);
  bn->add_option("--stages", stages, "comma-separated: binarize,components,select,downscale,composite");

  // drone
  auto* drone = app.add_subcommand("drone", "sender: stream frames to a ground station");
  std::string listen = "0.0.0.0:7700", frames_dir;
  int downscale_factor = 8, synthetic = 0, max_in_flight = 1, seed = 1;
  double fps = 0;
  bool bypass = false;
  drone->add_option("--listen", listen);
  auto* d_frames = drone->add_option("--frames", frames_dir, "directory of PNG frames");
  auto* d_syn = drone->add_option("--synthetic", synthetic, "generate this many synthetic frames instead");
  d_frames->excludes(d_syn);
  auto* d_heat = drone->add_option("--heatmaps", heatmaps, "heatmaps matching the frame names");
  auto* d_det = drone->add_option("--detections", det_file, "detections matched through --images");
  d_heat->excludes(d_det);
  drone->add_option("--images", images_file);
  drone->add_option("--dims", dims, "synthetic frame size");
  drone->add_option("--seed", seed);
  drone->add_option("--r", r)->check(CLI::Range(0.0, 1.0));
  drone->add_option("--downscale", downscale_factor)->check(CLI::PositiveNumber);
  drone->add_option("--fps", fps, "frame rate cap (0 = as fast as acknowledged)");
  drone->add_option("--max-in-flight", max_in_flight, "unacknowledged frames allowed (0 = unlimited)");
  drone->add_flag("--requests-bypass-budget", bypass, "operator tiles do not consume the budget");
  drone->add_option("--threshold", popt.threshold, "heatmap threshold")->check(CLI::Range(0.0, 1.0));
  pol.add(drone);

  // ground
  auto* ground = app.add_subcommand("ground", "receiver: composite, detect, record, serve operators");
  std::string connect = "127.0.0.1:7700", plugin, ws_listen, record_dir;
  int plugin_timeout_ms = 5000, workers = 1, connect_timeout_s = 30;
  ground->add_option("--connect", connect);
  ground->add_option("--plugin", plugin, "detector command; receives a PNG tile on stdin");
  ground->add_option("--plugin-timeout-ms", plugin_timeout_ms)->check(CLI::PositiveNumber);
  ground->add_option("--workers", workers, "parallel plugin runs")->check(CLI::PositiveNumber);
  ground->add_option("--ws-listen", ws_listen, "operator WebSocket bridge address");
  ground->add_option("--record", record_dir, "write composited frames and session.csv here");
  ground->add_option("--connect-timeout", connect_timeout_s, "seconds to keep retrying the drone");

  // loopback
  auto* lb = app.add_subcommand("loopback", "drone and ground in one process on synthetic frames");
  LoopbackConfig lcfg;
  std::vector<std::string> requests;
  std::string lb_dims = "128x128";
  lb->add_option("--frames", lcfg.frames);
  lb->add_option("--r", lcfg.r)->check(CLI::Range(0.0, 1.0));
  lb->add_option("--dims", lb_dims);
  lb->add_option("--downscale", downscale_factor)->check(CLI::PositiveNumber);
  lb->add_option("--seed", lcfg.seed);
  lb->add_option("--plugin", plugin);
  lb->add_option("--record", record_dir);
  lb->add_option("--request", requests, "FRAME:x,y,w,h issued after FRAME is received");
  pol.add(lb);

  CLI11_PARSE(app, argc, argv);
  popt.connectivity = connectivity == 4 ? Connectivity::Four : Connectivity::Eight;

  try {
    if (*propose) return cmd_propose(heatmaps, out, images_file, popt);
    if (*sel) return cmd_select(det_file, images_file, r, pol.policy(), out);
    if (*expand) return cmd_expand(ann_file, min_w, min_h, out);

    if (*sw) {
      if (det_file.empty() && heatmaps.empty()) throw ConfigError("sweep needs --detections or --heatmaps");
      Dataset ds = det_file.empty() ? load_dataset(ann_file) : load_dataset(ann_file, det_file);
      if (expand_gt) ds = expand_min_size(std::move(ds));
      std::map<std::int64_t, ProposalSet> props =
          det_file.empty() ? proposals_from_dir(heatmaps, popt, ds) : *ds.detections;
      SweepConfig cfg;
      cfg.r_grid = parse_grid(grid);
      cfg.policy = pol.policy();
      cfg.match = {match_threshold, kMatch.at(match_mode)};
      cfg.aggregation = kAgg.at(agg);
      cfg.threads = threads;
      const auto pts = sweep(ds, props, cfg);
      write_metrics_csv(pts, fs::path(out));
      json meta = sweep_meta(cfg);
      meta["grid"] = grid;
      meta["images"] = ds.images.size();
      meta["ground_truth_expanded"] = expand_gt;
      write_json(meta, out + ".meta.json");
      spdlog::info("{} rows -> {}", pts.size(), out);
      return 0;
    }

    if (*bn) {
      bcfg.dims = parse_dims(dims);
      bcfg.stages.clear();
      std::stringstream ss(stages);
      for (std::string s; std::getline(ss, s, ',');) bcfg.stages.push_back(s);
      return cmd_bench(bcfg);
    }

    if (*drone) {
      if (frames_dir.empty() && synthetic <= 0) throw ConfigError("drone needs --frames or --synthetic");
      std::vector<fs::path> frame_files;
      FrameDims fdims = parse_dims(dims);
      if (!frames_dir.empty()) {
        frame_files = files_with(frames_dir, {".png"});
        if (frame_files.empty()) throw ConfigError("no PNG frames in " + frames_dir);
        fdims = read_png(frame_files.front()).dims;
      }
      std::map<std::string, ProposalSet> by_stem;
      if (!heatmaps.empty()) {
        for (const auto& f : files_with(heatmaps, {".pfm", ".pgm"})) {
          by_stem[f.stem().string()] = proposals_from_file(f, popt);
        }
      } else if (!det_file.empty()) {
        if (images_file.empty()) throw ConfigError("--detections needs --images");
        const Dataset ds = load_dataset(images_file, det_file);
        for (const auto& img : ds.images) {
          by_stem[fs::path(img.file_name).stem().string()] = ds.detections->at(img.id);
        }
      } else if (synthetic <= 0) {
        throw ConfigError("drone needs --heatmaps or --detections for real frames");
      }

      SessionConfig scfg{fdims, downscale_factor, pol.policy(), bypass};
      spdlog::info("drone: waiting for a ground station on {}", listen);
      TcpListener listener(listen);
      auto channel = std::make_shared<MessageChannel>(listener.accept());
      DroneSession session(channel, scfg, r, max_in_flight);
      session.start();
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
      SceneParams sp;
      sp.dims = fdims;
      sp.max_size = std::max(2, std::min(fdims.width, fdims.height) / 6);
      const auto t0 = std::chrono::steady_clock::now();
      const int n = frame_files.empty() ? synthetic : static_cast<int>(frame_files.size());
      for (int i = 0; i < n && !session.peer_gone(); ++i) {
        RgbImage frame;
        ProposalSet props;
        if (frame_files.empty()) {
          SyntheticScene s = make_scene(sp, rng);
          frame = std::move(s.frame);
          props = propose_from_heatmap(s.heatmap, popt);
        } else {
          frame = read_png(frame_files[static_cast<std::size_t>(i)]);
          const auto it = by_stem.find(frame_files[static_cast<std::size_t>(i)].stem().string());
          props = it == by_stem.end() ? ProposalSet{frame.dims, {}} : it->second;
        }
        if (fps > 0) std::this_thread::sleep_until(t0 + std::chrono::duration<double>(i / fps));
        const auto ts = std::chrono::duration_cast<std::chrono::microseconds>(
                            std::chrono::steady_clock::now() - t0).count();
        const auto res = session.send_frame(frame, props, static_cast<std::uint64_t>(ts));
        spdlog::info("drone: frame {} {} tiles, {} / {} px", i + 1, res.tiles.size(), res.charged, res.budget);
      }
      session.finish();
      return 0;
    }

    if (*ground) {
      std::shared_ptr<ByteStream> stream;
      const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(connect_timeout_s);
      while (!stream) {
        try {
          stream = tcp_connect(connect);
        } catch (const Error& e) {
          if (std::chrono::steady_clock::now() > deadline) throw;
          std::this_thread::sleep_for(std::chrono::milliseconds(250));
        }
      }
      auto channel = std::make_shared<MessageChannel>(stream);
      GroundConfig gcfg;
      if (!plugin.empty()) gcfg.plugin = PluginSpec{plugin, std::chrono::milliseconds(plugin_timeout_ms)};
      gcfg.plugin_workers = workers;
      GroundSession session(channel, gcfg);
      std::optional<Recorder> recorder;
      if (!record_dir.empty()) recorder.emplace(record_dir);
      std::unique_ptr<WsBridge> bridge;
      if (!ws_listen.empty()) {
        bridge = std::make_unique<WsBridge>(ws_listen, [&](const wire::CustomRoiRequest& req) {
          try {
            session.request_roi(req);
          } catch (const Error& e) {
            spdlog::warn("ground: request not forwarded: {}", e.what());
          }
        });
        spdlog::info("ground: operator bridge on port {}", bridge->port());
      }
      session.on_frame([&](const GroundFrame& f) {
        if (recorder) recorder->record(f);
        if (bridge) bridge->publish(frame_record(f));
        spdlog::info("ground: frame {} {} rois {} detections", f.meta.frame_id, f.rois.size(),
                     f.detections.size());
      });
      session.on_ack([&](const wire::Ack& a) {
        if (bridge) bridge->publish(ack_record(a));
      });
      session.run();
      try {
        channel->send(wire::Bye{});
      } catch (const Error&) {
      }
      channel->close();
      if (bridge) bridge->stop();
      spdlog::info("ground: {} frames, {} violations, {} protocol errors", session.frames(),
                   session.violations(), session.protocol_errors());
      return session.violations() == 0 ? 0 : 3;
    }

    if (*lb) {
      lcfg.session = {parse_dims(lb_dims), downscale_factor, pol.policy(), false};
      lcfg.scene.max_size = std::max(2, std::min(lcfg.session.dims.width, lcfg.session.dims.height) / 6);
      if (!plugin.empty()) lcfg.plugin = PluginSpec{plugin};
      if (!record_dir.empty()) lcfg.record_dir = record_dir;
      std::uint64_t next_id = 1;
      for (const auto& spec : requests) {
        unsigned long long frame = 0;
        int x, y, w, h;
        if (std::sscanf(spec.c_str(), "%llu:%d,%d,%d,%d", &frame, &x, &y, &w, &h) != 5) {
          throw ConfigError("bad --request '" + spec + "', expected FRAME:x,y,w,h");
        }
        lcfg.inject[frame].push_back({next_id++, {x, y, w, h}, false});
      }
      const auto report = run_loopback(lcfg);
      for (const auto& f : report.frames) {
        std::size_t op = 0;
        for (const auto& roi : f.received.rois) op += roi.origin == wire::RoiOrigin::OperatorRequested;
        std::printf("frame %llu rois %zu operator %zu charged %lld budget %lld detections %zu\n",
                    static_cast<unsigned long long>(f.received.meta.frame_id), f.received.rois.size(), op,
                    static_cast<long long>(f.received.charged), static_cast<long long>(f.received.budget),
                    f.received.detections.size());
      }
      return report.violations == 0 && report.protocol_errors == 0 ? 0 : 3;
    }
  } catch (const ParseError& e) {
    spdlog::error("{} ({})", e.what(), e.record());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
