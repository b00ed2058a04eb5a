#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roilink/geometry.hpp"
#include "roilink/selection.hpp"

namespace roilink {

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  FrameDims dims;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Ground-truth boxes of one image.
struct AnnotationSet {
  FrameDims frame;
  std::vector<RectPx> boxes;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct Dataset {
  std::vector<ImageRecord> images;
  std::map<std::int64_t, AnnotationSet> annotations;  // one entry per image
  std::optional<std::map<std::int64_t, ProposalSet>> detections;

  // Load diagnostics: boxes clamped to their image, and boxes dropped because
  // nothing of them remained inside the image.
  std::size_t clamped = 0;
  std::size_t dropped = 0;

  const ImageRecord* find_image(std::int64_t id) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.images == b.images && a.annotations == b.annotations &&
           a.detections == b.detections;
  }
};

/// Reads a COCO-style annotation file and, optionally, a detection file.
///
/// Annotations: {"images": [{id, file_name, width, height}],
///               "annotations": [{image_id, bbox: [x, y, w, h]}]}.
/// Detections: either a bare array of {image_id, bbox, score?} or an object
/// with an "annotations" array of the same; an optional "images" array marks
/// images that were processed but produced no detections. With a bare array
/// every dataset image counts as processed.
///
/// Throws ParseError naming the offending record on malformed JSON, dangling
/// image ids, duplicate image ids, or negative box dims. Boxes overshooting
/// their image are clamped and counted in Dataset::clamped.
Dataset load_dataset(const std::filesystem::path& annotations_path,
                     const std::optional<std::filesystem::path>& detections_path = {});

Dataset parse_dataset(const nlohmann::json& annotations,
                      const nlohmann::json* detections = nullptr);

nlohmann::json annotations_json(const Dataset& dataset);
/// Detections as {"images": [...], "annotations": [...]}; requires
/// dataset.detections.
nlohmann::json detections_json(const Dataset& dataset);

void save_annotations(const Dataset& dataset, const std::filesystem::path& path);
void save_detections(const Dataset& dataset, const std::filesystem::path& path);

/// Grows a box to at least min_w x min_h about its center, translating it
/// inward when it would leave the frame. An axis where the frame is smaller
/// than the minimum spans the whole frame. Axes already at the minimum are
/// left alone.
RectPx expand_box(const RectPx& box, const FrameDims& frame, int min_w, int min_h);

/// expand_box applied to every ground-truth box. Detections are untouched.
Dataset expand_min_size(Dataset dataset, int min_w = 500, int min_h = 500);

}  // namespace roilink
