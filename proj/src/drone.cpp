#include "roilink/drone.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "roilink/error.hpp"

namespace roilink {

wire::Hello SessionConfig::hello() const {
  wire::Hello h;
  h.width = static_cast<std::uint32_t>(dims.width);
  h.height = static_cast<std::uint32_t>(dims.height);
  h.downscale = static_cast<std::uint16_t>(downscale);
  h.accounting = policy.accounting == Accounting::UnionPixels ? 0 : 1;
  h.flags = requests_bypass_budget ? 1 : 0;
  return h;
}

SessionConfig SessionConfig::from_hello(const wire::Hello& h) {
  SessionConfig cfg;
  cfg.dims = {static_cast<int>(h.width), static_cast<int>(h.height)};
  cfg.downscale = std::max<int>(1, h.downscale);
  cfg.policy.accounting = h.accounting == 0 ? Accounting::UnionPixels : Accounting::SumOfCropAreas;
  cfg.requests_bypass_budget = (h.flags & 1) != 0;
  return cfg;
}

std::uint32_t budget_micro(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("bandwidth portion outside [0,1]");
  return static_cast<std::uint32_t>(std::llround(r * 1e6));
}

DroneStepResult drone_step(const DroneStepInput& in, const SessionConfig& cfg) {
  if (in.frame == nullptr || in.proposals == nullptr) {
    throw Error("drone_step needs a frame and a proposal set");
  }
  const FrameDims dims = cfg.dims;
  if (in.frame->dims != dims) throw GeometryError("frame dims do not match the session");
  if (in.proposals->frame != dims) throw GeometryError("proposal dims do not match the session");

  const std::uint32_t micro = budget_micro(in.r);
  DroneStepResult out;
  out.budget = pixel_budget(micro / 1e6, dims);

  wire::FrameMeta meta;
  meta.frame_id = in.frame_id;
  meta.timestamp_us = in.timestamp_us;
  meta.width = static_cast<std::uint32_t>(dims.width);
  meta.height = static_cast<std::uint32_t>(dims.height);
  meta.downscale = static_cast<std::uint16_t>(cfg.downscale);
  meta.budget_micro = micro;

  const GrayImage base = downscale(to_gray(*in.frame), cfg.downscale);
  wire::BaseLayer layer;
  layer.frame_id = in.frame_id;
  layer.width = static_cast<std::uint32_t>(base.dims.width);
  layer.height = static_cast<std::uint32_t>(base.dims.height);
  layer.pixels = base.pixels;

  // Operator requests first.
  wire::RoiList list;
  list.frame_id = in.frame_id;
  std::vector<wire::Ack> acks;
  std::vector<RectPx> committed;  // operator rects charged against the budget
  for (const auto& req : in.requests) {
    wire::Ack ack{req.request_id, in.frame_id, wire::AckCode::Accepted};
    if (req.rect.empty() || !dims.contains(req.rect)) {
      ack.code = wire::AckCode::RejectedOutOfBounds;
    } else if (!cfg.requests_bypass_budget) {
      committed.push_back(req.rect);
      if (accounted_area(committed, cfg.policy.accounting) > out.budget) {
        committed.pop_back();
        ack.code = wire::AckCode::RejectedOverBudget;
      }
    }
    if (ack.code == wire::AckCode::Accepted) {
      list.entries.push_back({req.rect, wire::RoiOrigin::OperatorRequested, req.request_id});
    }
    acks.push_back(ack);
  }

  const Selection sel = select_with_budget(*in.proposals, out.budget, cfg.policy, committed);
  for (const RectPx& r : sel.rects(*in.proposals)) {
    list.entries.push_back({r, wire::RoiOrigin::Algorithmic, 0});
  }

  out.messages.reserve(3 + list.entries.size() + acks.size());
  out.messages.emplace_back(meta);
  out.messages.emplace_back(std::move(layer));
  for (const auto& e : list.entries) out.tiles.push_back(e.rect);
  std::vector<RectPx> charged = committed;
  for (const auto& e : list.entries) {
    if (e.origin == wire::RoiOrigin::Algorithmic) charged.push_back(e.rect);
  }
  out.charged = accounted_area(charged, cfg.policy.accounting);
  out.messages.emplace_back(list);
  for (const auto& e : list.entries) {
    wire::RoiTile tile;
    tile.frame_id = in.frame_id;
    tile.rect = e.rect;
    tile.origin = e.origin;
    // Codec hook: tiles travel as raw RGB; a compressor would wrap this.
    tile.pixels = crop(*in.frame, e.rect);
    out.messages.emplace_back(std::move(tile));
  }
  for (const auto& a : acks) out.messages.emplace_back(a);
  return out;
}

void RequestQueue::push(const wire::CustomRoiRequest& request) {
  std::lock_guard lock(mutex_);
  pending_.push_back(request);
}

std::vector<wire::CustomRoiRequest> RequestQueue::drain() {
  std::lock_guard lock(mutex_);
  return std::exchange(pending_, {});
}

DroneSession::DroneSession(std::shared_ptr<MessageChannel> channel, SessionConfig cfg, double r,
                           int max_in_flight)
    : channel_(std::move(channel)), cfg_(std::move(cfg)), r_(r), max_in_flight_(max_in_flight) {
  cfg_.dims.validate();
  budget_micro(r_);
}

DroneSession::~DroneSession() {
  if (reader_.joinable()) {
    channel_->close();
    reader_.join();
  }
}

void DroneSession::start() {
  channel_->send(cfg_.hello());
  reader_ = std::thread([this] { reader_loop(); });
}

void DroneSession::reader_loop() {
  while (auto msg = channel_->receive()) {
    if (const auto* req = std::get_if<wire::CustomRoiRequest>(&*msg)) {
      spdlog::debug("drone: request {} received", req->request_id);
      queue_.push(*req);
    } else if (const auto* ack = std::get_if<wire::Ack>(&*msg)) {
      if (ack->code == wire::AckCode::FrameReceived) {
        std::lock_guard lock(credit_mutex_);
        acked_frame_ = std::max(acked_frame_, ack->frame_id);
        credit_cv_.notify_all();
      }
    } else if (std::holds_alternative<wire::Bye>(*msg)) {
      break;
    } else {
      spdlog::warn("drone: unexpected {} from ground", wire::name_of(wire::type_of(*msg)));
    }
  }
  std::lock_guard lock(credit_mutex_);
  peer_gone_ = true;
  credit_cv_.notify_all();
}

bool DroneSession::peer_gone() const {
  std::lock_guard lock(credit_mutex_);
  return peer_gone_;
}

void DroneSession::wait_for_credit() {
  if (max_in_flight_ <= 0) return;
  std::unique_lock lock(credit_mutex_);
  credit_cv_.wait(lock, [this] {
    return peer_gone_ ||
           next_frame_id_ - 1 - acked_frame_ < static_cast<std::uint64_t>(max_in_flight_);
  });
}

DroneStepResult DroneSession::send_frame(const RgbImage& frame, const ProposalSet& proposals,
                                         std::uint64_t timestamp_us) {
  wait_for_credit();
  if (peer_gone()) throw Error("ground station disconnected");

  std::vector<wire::CustomRoiRequest> requests;
  std::vector<wire::Ack> cancels;
  const std::uint64_t frame_id = next_frame_id_;
  // Standing requests keep their place ahead of newly arrived ones.
  for (const auto& [id, req] : standing_) requests.push_back(req);
  for (const auto& req : queue_.drain()) {
    if (req.is_cancel()) {
      standing_.erase(req.request_id);
      std::erase_if(requests, [&](const auto& r) { return r.request_id == req.request_id; });
      cancels.push_back({req.request_id, frame_id, wire::AckCode::Cancelled});
      continue;
    }
    requests.push_back(req);
  }

  DroneStepInput in;
  in.frame_id = frame_id;
  in.timestamp_us = timestamp_us;
  in.frame = &frame;
  in.proposals = &proposals;
  in.requests = requests;
  in.r = r_;
  DroneStepResult result = drone_step(in, cfg_);

  for (const auto& req : requests) {
    if (!req.persistent) continue;
    const bool accepted = std::any_of(result.messages.begin(), result.messages.end(),
                                      [&](const wire::WireMessage& m) {
                                        const auto* a = std::get_if<wire::Ack>(&m);
                                        return a && a->request_id == req.request_id &&
                                               a->code == wire::AckCode::Accepted;
                                      });
    if (accepted) standing_[req.request_id] = req;
  }

  for (const auto& m : result.messages) channel_->send(m);
  for (const auto& c : cancels) channel_->send(c);
  ++next_frame_id_;
  return result;
}

void DroneSession::finish() {
  try {
    channel_->send(wire::Bye{});
  } catch (const Error& e) {
    spdlog::debug("drone: bye not delivered: {}", e.what());
  }
  if (reader_.joinable()) reader_.join();
}

}  // namespace roilink
