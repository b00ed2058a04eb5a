#include "roilink/ground.hpp"

#include <future>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "roilink/bridge.hpp"
#include "roilink/error.hpp"
#include "roilink/image_io.hpp"

namespace roilink {

RgbImage composite(const wire::BaseLayer& base, std::span<const wire::RoiTile> tiles,
                   const FrameDims& dims, int factor) {
  dims.validate();
  if (factor < 1) throw GeometryError("downscale factor must be >= 1");
  const FrameDims want = downscaled_dims(dims, factor);
  if (base.width != static_cast<std::uint32_t>(want.width) ||
      base.height != static_cast<std::uint32_t>(want.height) ||
      base.pixels.size() != static_cast<std::size_t>(want.area())) {
    throw GeometryError("base layer does not match frame dims");
  }
  GrayImage g(want);
  g.pixels = base.pixels;
  RgbImage out = upscale_to_rgb(g, factor, dims);
  for (const auto& t : tiles) {
    if (!dims.contains(t.rect)) throw GeometryError("tile out of bounds");
    paste(out, t.rect, t.pixels);
  }
  return out;
}

GroundSession::GroundSession(std::shared_ptr<MessageChannel> channel, GroundConfig cfg)
    : channel_(std::move(channel)), cfg_(std::move(cfg)) {
  if (cfg_.plugin_workers < 1) throw ConfigError("plugin workers must be >= 1");
}

void GroundSession::on_frame(std::function<void(const GroundFrame&)> callback) {
  frame_callbacks_.push_back(std::move(callback));
}

void GroundSession::on_ack(std::function<void(const wire::Ack&)> callback) {
  ack_callbacks_.push_back(std::move(callback));
}

void GroundSession::request_roi(const wire::CustomRoiRequest& request) { channel_->send(request); }

void GroundSession::cancel(std::uint64_t request_id) {
  channel_->send(wire::CustomRoiRequest{request_id, {}, false});
}

void GroundSession::close() { channel_->close(); }

void GroundSession::violation(const std::string& what) {
  ++violations_;
  spdlog::warn("ground: {}", what);
}

void GroundSession::run() {
  while (!done_) {
    auto msg = channel_->receive();
    if (!msg) break;
    handle(std::move(*msg));
  }
  if (pending_) finish_frame();
}

void GroundSession::handle(wire::WireMessage msg) {
  std::visit(
      [&](auto&& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, wire::Hello>) {
          session_ = SessionConfig::from_hello(m);
          spdlog::info("ground: session {}x{} downscale {}", m.width, m.height, m.downscale);
        } else if constexpr (std::is_same_v<T, wire::FrameMeta>) {
          if (pending_) finish_frame();
          if (m.frame_id <= last_frame_id_) {
            violation("frame id " + std::to_string(m.frame_id) + " not increasing");
            return;
          }
          if (!session_) {
            // No Hello: take what FrameMeta carries.
            wire::Hello h{m.width, m.height, m.downscale, 0, 0};
            session_ = SessionConfig::from_hello(h);
          }
          last_frame_id_ = m.frame_id;
          pending_ = Pending{m, {}, {}, {}};
        } else if constexpr (std::is_same_v<T, wire::BaseLayer>) {
          if (!pending_ || m.frame_id != pending_->meta.frame_id) {
            violation("base layer without frame meta");
            return;
          }
          pending_->base = std::move(m);
        } else if constexpr (std::is_same_v<T, wire::RoiList>) {
          if (!pending_ || m.frame_id != pending_->meta.frame_id) {
            violation("roi list without frame meta");
            return;
          }
          pending_->list = std::move(m);
          if (pending_->base && pending_->list->entries.empty()) finish_frame();
        } else if constexpr (std::is_same_v<T, wire::RoiTile>) {
          if (!pending_ || m.frame_id != pending_->meta.frame_id) {
            violation("tile for frame " + std::to_string(m.frame_id) + " without frame meta");
            return;
          }
          pending_->tiles.push_back(std::move(m));
          if (pending_->base && pending_->list &&
              pending_->tiles.size() == pending_->list->entries.size()) {
            finish_frame();
          }
        } else if constexpr (std::is_same_v<T, wire::Ack>) {
          for (auto& cb : ack_callbacks_) cb(m);
        } else if constexpr (std::is_same_v<T, wire::Bye>) {
          done_ = true;
        } else {
          violation(std::string("unexpected ") + std::string(wire::name_of(wire::type_of(m))));
        }
      },
      std::move(msg));
}

void GroundSession::finish_frame() {
  Pending p = std::move(*pending_);
  pending_.reset();
  const SessionConfig& sc = *session_;
  const FrameDims dims{static_cast<int>(p.meta.width), static_cast<int>(p.meta.height)};

  GroundFrame f;
  f.meta = p.meta;
  f.complete = p.base && p.list && p.tiles.size() == p.list->entries.size();
  if (p.list) f.rois = p.list->entries;
  try {
    const wire::BaseLayer base =
        p.base ? *p.base : wire::BaseLayer{p.meta.frame_id, 0, 0, {}};
    if (p.base) {
      f.image = composite(base, p.tiles, dims, std::max<int>(1, p.meta.downscale));
    } else {
      f.image = RgbImage(dims);
      for (const auto& t : p.tiles) paste(f.image, t.rect, t.pixels);
    }
  } catch (const GeometryError& e) {
    violation(std::string("frame ") + std::to_string(p.meta.frame_id) + ": " + e.what());
    f.complete = false;
    f.image = RgbImage(dims);
  }

  f.budget = pixel_budget(p.meta.budget_r(), dims);
  std::vector<RectPx> charged;
  for (const auto& t : p.tiles) {
    if (t.origin == wire::RoiOrigin::OperatorRequested && sc.requests_bypass_budget) continue;
    charged.push_back(t.rect);
  }
  f.charged = accounted_area(charged, sc.policy.accounting);
  if (!f.within_budget()) {
    violation("frame " + std::to_string(p.meta.frame_id) + " over budget: " +
              std::to_string(f.charged) + " > " + std::to_string(f.budget));
  }

  if (cfg_.plugin) {
    // Fan out in batches of plugin_workers; results are merged in tile order.
    std::vector<PluginResult> results(p.tiles.size());
    for (std::size_t start = 0; start < p.tiles.size();
         start += static_cast<std::size_t>(cfg_.plugin_workers)) {
      const std::size_t end =
          std::min(p.tiles.size(), start + static_cast<std::size_t>(cfg_.plugin_workers));
      std::vector<std::future<PluginResult>> jobs;
      for (std::size_t i = start; i < end; ++i) {
        jobs.push_back(std::async(std::launch::async, run_detector_plugin, std::cref(p.tiles[i]),
                                  std::cref(*cfg_.plugin)));
      }
      for (std::size_t i = start; i < end; ++i) results[i] = jobs[i - start].get();
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].ok) {
        spdlog::warn("ground: frame {} tile {} undetected: {}", p.meta.frame_id, i, results[i].error);
        f.undetected.push_back(i);
        continue;
      }
      f.detections.insert(f.detections.end(), results[i].boxes.begin(), results[i].boxes.end());
    }
  }

  ++frames_;
  for (auto& cb : frame_callbacks_) cb(f);
  try {
    channel_->send(wire::Ack{0, p.meta.frame_id, wire::AckCode::FrameReceived});
  } catch (const Error& e) {
    spdlog::debug("ground: frame ack not delivered: {}", e.what());
  }
}

Recorder::Recorder(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  csv_.open(dir_ / "session.csv");
  if (!csv_) throw Error("cannot write " + (dir_ / "session.csv").string());
  csv_ << "frame_id,timestamp_us,n_rois,n_operator,tile_pixels,charged,budget,n_detections,n_undetected\n";
}

void Recorder::record(const GroundFrame& f) {
  std::lock_guard lock(mutex_);
  char stem[32];
  std::snprintf(stem, sizeof stem, "frame_%06llu", static_cast<unsigned long long>(f.meta.frame_id));
  write_png(f.image, dir_ / (std::string(stem) + ".png"));
  nlohmann::json meta = frame_metadata(f);
  std::ofstream(dir_ / (std::string(stem) + ".json")) << meta.dump(2) << '\n';

  Area tile_pixels = 0;
  std::size_t n_operator = 0;
  for (const auto& r : f.rois) {
    tile_pixels += r.rect.area();
    if (r.origin == wire::RoiOrigin::OperatorRequested) ++n_operator;
  }
  csv_ << f.meta.frame_id << ',' << f.meta.timestamp_us << ',' << f.rois.size() << ','
       << n_operator << ',' << tile_pixels << ',' << f.charged << ',' << f.budget << ','
       << f.detections.size() << ',' << f.undetected.size() << '\n';
  csv_.flush();
}

}  // namespace roilink
