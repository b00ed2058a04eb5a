#include "roilink/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "roilink/error.hpp"

namespace roilink {

using nlohmann::json;

const ImageRecord* Dataset::find_image(std::int64_t id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), path.string());
  }
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::string record_name(const char* kind, std::size_t index, const json& item) {
  std::string name = std::string(kind) + " #" + std::to_string(index);
  if (item.is_object() && item.contains("id")) name += " (id " + item["id"].dump() + ")";
  return name;
}

template <typename T>
T field(const json& item, const char* key, const std::string& record) {
  if (!item.is_object() || !item.contains(key)) {
    throw ParseError(std::string("missing field '") + key + "'", record);
  }
  try {
    return item.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("bad field '") + key + "'", record);
  }
}

struct BoxLoader {
  const Dataset& dataset;
  std::size_t clamped = 0;
  std::size_t dropped = 0;

  // Returns nullopt when the box lies entirely outside its image.
  std::optional<RectPx> load(const json& item, const std::string& record,
                             const ImageRecord& image) {
    const auto bbox = field<std::vector<double>>(item, "bbox", record);
    if (bbox.size() != 4) throw ParseError("bbox must have 4 entries", record);
    for (double v : bbox) {
      if (!std::isfinite(v)) throw ParseError("non-finite bbox value", record);
    }
    if (bbox[2] < 0 || bbox[3] < 0) throw ParseError("negative box dims", record);
    const auto x0 = std::llround(bbox[0]);
    const auto y0 = std::llround(bbox[1]);
    const auto x1 = std::llround(bbox[0] + bbox[2]);
    const auto y1 = std::llround(bbox[1] + bbox[3]);
    const long long cx0 = std::clamp<long long>(x0, 0, image.dims.width);
    const long long cy0 = std::clamp<long long>(y0, 0, image.dims.height);
    const long long cx1 = std::clamp<long long>(x1, 0, image.dims.width);
    const long long cy1 = std::clamp<long long>(y1, 0, image.dims.height);
    if (cx0 != x0 || cy0 != y0 || cx1 != x1 || cy1 != y1) {
      ++clamped;
      spdlog::warn("{}: box clamped to image {}", record, image.id);
    }
    RectPx r{static_cast<int>(cx0), static_cast<int>(cy0),
             static_cast<int>(cx1 - cx0), static_cast<int>(cy1 - cy0)};
    if (r.empty()) {
      ++dropped;
      spdlog::warn("{}: zero-area box dropped", record);
      return std::nullopt;
    }
    return r;
  }
};

const json& items_of(const json& doc, const char* key, const std::string& what) {
  if (!doc.is_object() || !doc.contains(key) || !doc[key].is_array()) {
    throw ParseError(std::string("expected an array '") + key + "'", what);
  }
  return doc[key];
}

}  // namespace

Dataset parse_dataset(const json& annotations, const json* detections) {
  Dataset ds;
  std::set<std::int64_t> ids;
  const json& images = items_of(annotations, "images", "annotations file");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto record = record_name("image", i, images[i]);
    ImageRecord img;
    img.id = field<std::int64_t>(images[i], "id", record);
    img.file_name = images[i].value("file_name", std::string{});
    img.dims.width = field<int>(images[i], "width", record);
    img.dims.height = field<int>(images[i], "height", record);
    if (img.dims.width < 1 || img.dims.height < 1) {
      throw ParseError("image dims must be positive", record);
    }
    if (!ids.insert(img.id).second) {
      throw ParseError("duplicate image id " + std::to_string(img.id), record);
    }
    ds.annotations[img.id] = AnnotationSet{img.dims, {}};
    ds.images.push_back(std::move(img));
  }

  BoxLoader loader{ds};
  auto image_for = [&](const json& item, const std::string& record) -> const ImageRecord& {
    const auto id = field<std::int64_t>(item, "image_id", record);
    const ImageRecord* img = ds.find_image(id);
    if (img == nullptr) {
      throw ParseError("unknown image_id " + std::to_string(id), record);
    }
    return *img;
  };

  if (annotations.contains("annotations")) {
    const json& anns = items_of(annotations, "annotations", "annotations file");
    for (std::size_t i = 0; i < anns.size(); ++i) {
      const auto record = record_name("annotation", i, anns[i]);
      const ImageRecord& img = image_for(anns[i], record);
      if (auto r = loader.load(anns[i], record, img)) {
        ds.annotations[img.id].boxes.push_back(*r);
      }
    }
  }

  if (detections != nullptr) {
    std::map<std::int64_t, ProposalSet> dets;
    const json* items = detections;
    if (detections->is_object()) {
      items = &items_of(*detections, "annotations", "detections file");
      if (detections->contains("images")) {
        for (const auto& im : (*detections)["images"]) {
          const auto id = field<std::int64_t>(im, "id", "detections image");
          const ImageRecord* img = ds.find_image(id);
          if (img == nullptr) {
            throw ParseError("unknown image id " + std::to_string(id),
                             "detections image");
          }
          dets[id].frame = img->dims;
        }
      }
    } else if (detections->is_array()) {
      for (const auto& img : ds.images) dets[img.id].frame = img.dims;
    } else {
      throw ParseError("detections must be an array or object");
    }
    for (std::size_t i = 0; i < items->size(); ++i) {
      const json& item = (*items)[i];
      const auto record = record_name("detection", i, item);
      const ImageRecord& img = image_for(item, record);
      std::optional<double> score;
      if (item.contains("score") && !item["score"].is_null()) {
        score = field<double>(item, "score", record);
        if (!(*score >= 0.0 && *score <= 1.0)) {
          throw ParseError("score outside [0,1]", record);
        }
      }
      auto& set = dets[img.id];
      set.frame = img.dims;
      if (auto r = loader.load(item, record, img)) {
        set.boxes.push_back({*r, score});
      }
    }
    ds.detections = std::move(dets);
  }
  ds.clamped = loader.clamped;
  ds.dropped = loader.dropped;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& annotations_path,
                     const std::optional<std::filesystem::path>& detections_path) {
  const json ann = read_json(annotations_path);
  if (detections_path) {
    const json det = read_json(*detections_path);
    return parse_dataset(ann, &det);
  }
  return parse_dataset(ann, nullptr);
}

namespace {

json images_json(const Dataset& ds) {
  json images = json::array();
  for (const auto& img : ds.images) {
    images.push_back({{"id", img.id},
                      {"file_name", img.file_name},
                      {"width", img.dims.width},
                      {"height", img.dims.height}});
  }
  return images;
}

json bbox_json(const RectPx& r) { return json::array({r.x, r.y, r.w, r.h}); }

}  // namespace

json annotations_json(const Dataset& ds) {
  json anns = json::array();
  std::int64_t next_id = 1;
  for (const auto& img : ds.images) {
    const auto it = ds.annotations.find(img.id);
    if (it == ds.annotations.end()) continue;
    for (const auto& r : it->second.boxes) {
      anns.push_back({{"id", next_id++},
                      {"image_id", img.id},
                      {"bbox", bbox_json(r)},
                      {"area", r.area()}});
    }
  }
  return {{"images", images_json(ds)}, {"annotations", anns}};
}

json detections_json(const Dataset& ds) {
  if (!ds.detections) throw Error("dataset has no detections");
  json images = json::array();
  json anns = json::array();
  for (const auto& img : ds.images) {
    const auto it = ds.detections->find(img.id);
    if (it == ds.detections->end()) continue;
    images.push_back({{"id", img.id},
                      {"file_name", img.file_name},
                      {"width", img.dims.width},
                      {"height", img.dims.height}});
    for (const auto& b : it->second.boxes) {
      json item = {{"image_id", img.id}, {"bbox", bbox_json(b.rect)}};
      if (b.confidence) item["score"] = *b.confidence;
      anns.push_back(std::move(item));
    }
  }
  return {{"images", images}, {"annotations", anns}};
}

void save_annotations(const Dataset& ds, const std::filesystem::path& path) {
  write_json(annotations_json(ds), path);
}

void save_detections(const Dataset& ds, const std::filesystem::path& path) {
  write_json(detections_json(ds), path);
}

namespace {

// Grows [pos, pos+len) to at least `min_len` inside [0, limit).
std::pair<int, int> expand_axis(int pos, int len, int min_len, int limit) {
  if (len >= min_len) return {pos, len};
  const int target = std::min(min_len, limit);
  // Twice the center is 2*pos + len; keep it where possible.
  const long long twice_start = 2LL * pos + len - target;
  int start = static_cast<int>(twice_start >= 0 ? twice_start / 2
                                                : -((-twice_start + 1) / 2));
  start = std::clamp(start, 0, limit - target);
  return {start, target};
}

}  // namespace

RectPx expand_box(const RectPx& box, const FrameDims& frame, int min_w, int min_h) {
  const auto [x, w] = expand_axis(box.x, box.w, min_w, frame.width);
  const auto [y, h] = expand_axis(box.y, box.h, min_h, frame.height);
  return {x, y, w, h};
}

Dataset expand_min_size(Dataset dataset, int min_w, int min_h) {
  if (min_w < 1 || min_h < 1) throw ConfigError("minimum box size must be >= 1");
  for (auto& [id, set] : dataset.annotations) {
    for (auto& box : set.boxes) box = expand_box(box, set.frame, min_w, min_h);
  }
  return dataset;
}

}  // namespace roilink
