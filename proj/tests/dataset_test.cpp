#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "roilink/dataset.hpp"
#include "roilink/error.hpp"

using namespace roilink;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "roilink_dataset_test";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

json minimal() {
  return {{"images", {{{"id", 1}, {"file_name", "a.png"}, {"width", 100}, {"height", 80}}}},
          {"annotations", {{{"id", 7}, {"image_id", 1}, {"bbox", {10, 20, 30, 40}}}}}};
}

}  // namespace

TEST(LoadDataset, Minimal) {
  const fs::path p = temp_path("minimal.json");
  write(p, minimal());
  const Dataset ds = load_dataset(p);
  ASSERT_EQ(ds.images.size(), 1u);
  EXPECT_EQ(ds.images[0].dims, (FrameDims{100, 80}));
  EXPECT_EQ(ds.annotations.at(1).boxes, (std::vector<RectPx>{{10, 20, 30, 40}}));
  EXPECT_FALSE(ds.detections.has_value());
}

TEST(LoadDataset, DanglingImageIdNamesTheId) {
  json j = minimal();
  j["annotations"][0]["image_id"] = 42;
  try {
    parse_dataset(j);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos) << e.what();
    EXPECT_NE(e.record().find("id 7"), std::string::npos) << e.record();
  }
}

TEST(LoadDataset, NegativeDimsAndDuplicates) {
  json neg = minimal();
  neg["annotations"][0]["bbox"] = {1, 1, -3, 4};
  EXPECT_THROW(parse_dataset(neg), ParseError);

  json dup = minimal();
  dup["images"].push_back(dup["images"][0]);
  EXPECT_THROW(parse_dataset(dup), ParseError);

  EXPECT_THROW(parse_dataset(json::array()), ParseError);
  const fs::path bad = temp_path("bad.json");
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_dataset(bad), ParseError);
}

TEST(LoadDataset, ClampsOvershoot) {
  json j = minimal();
  j["annotations"].push_back({{"image_id", 1}, {"bbox", {90, 70, 30, 30}}});
  j["annotations"].push_back({{"image_id", 1}, {"bbox", {200, 200, 5, 5}}});
  const Dataset ds = parse_dataset(j);
  EXPECT_EQ(ds.clamped, 2u);
  EXPECT_EQ(ds.dropped, 1u);
  EXPECT_EQ(ds.annotations.at(1).boxes.back(), (RectPx{90, 70, 10, 10}));
}

TEST(LoadDataset, DetectionFormats) {
  const json ann = minimal();
  const json bare = json::array({{{"image_id", 1}, {"bbox", {0, 0, 5, 5}}, {"score", 0.7}}});
  const Dataset a = parse_dataset(ann, &bare);
  ASSERT_TRUE(a.detections.has_value());
  ASSERT_EQ(a.detections->at(1).boxes.size(), 1u);
  EXPECT_EQ(a.detections->at(1).boxes[0].confidence, 0.7);

  const json obj = {{"images", {{{"id", 1}}}}, {"annotations", json::array()}};
  const Dataset b = parse_dataset(ann, &obj);
  ASSERT_TRUE(b.detections->contains(1));
  EXPECT_TRUE(b.detections->at(1).boxes.empty());

  const json bad_score = json::array({{{"image_id", 1}, {"bbox", {0, 0, 5, 5}}, {"score", 1.5}}});
  EXPECT_THROW(parse_dataset(ann, &bad_score), ParseError);
}

TEST(LoadDataset, FullTestSplitImageCount) {
  json images = json::array();
  for (int i = 0; i < 4235; ++i) {
    images.push_back({{"id", i}, {"file_name", std::to_string(i) + ".jpg"},
                      {"width", 3840}, {"height", 2160}});
  }
  const fs::path p = temp_path("test_split_stub.json");
  write(p, {{"images", images}, {"annotations", json::array()}});
  EXPECT_EQ(load_dataset(p).images.size(), 4235u);
}

TEST(LoadDataset, SaveLoadRoundTrip) {
  std::mt19937_64 rng(5);
  Dataset ds;
  ds.detections.emplace();
  for (int id = 1; id <= 20; ++id) {
    const FrameDims d{std::uniform_int_distribution<int>(10, 300)(rng),
                      std::uniform_int_distribution<int>(10, 300)(rng)};
    ds.images.push_back({id, "img" + std::to_string(id) + ".png", d});
    auto& anns = ds.annotations[id];
    anns.frame = d;
    auto& dets = (*ds.detections)[id];
    dets.frame = d;
    for (int k = 0; k < 5; ++k) {
      anns.boxes.push_back(oracle::random_rect(rng, d.width, d.height));
      dets.boxes.push_back({oracle::random_rect(rng, d.width, d.height),
                            k % 2 ? std::optional(0.125 * k) : std::nullopt});
    }
  }
  const fs::path a = temp_path("rt_ann.json");
  const fs::path d = temp_path("rt_det.json");
  save_annotations(ds, a);
  save_detections(ds, d);
  const Dataset back = load_dataset(a, d);
  EXPECT_EQ(back, ds);
  save_annotations(back, a);
  save_detections(back, d);
  EXPECT_EQ(load_dataset(a, d), back);
}

TEST(ExpandBox, Examples) {
  const FrameDims frame{3840, 2160};
  // 20x20 centered at (1920,1080).
  const RectPx small{1910, 1070, 20, 20};
  EXPECT_EQ(expand_box(small, frame, 500, 500), (RectPx{1670, 830, 500, 500}));
  EXPECT_EQ(expand_box({100, 100, 600, 450}, frame, 500, 500), (RectPx{100, 75, 600, 500}));
  EXPECT_EQ(expand_box({0, 0, 20, 20}, frame, 500, 500), (RectPx{0, 0, 500, 500}));
  EXPECT_EQ(expand_box({3830, 2150, 10, 10}, frame, 500, 500), (RectPx{3340, 1660, 500, 500}));
  // Frame narrower than the minimum: span the whole axis.
  EXPECT_EQ(expand_box({10, 10, 5, 5}, FrameDims{300, 2000}, 500, 500), (RectPx{0, 0, 300, 500}));
}

TEST(ExpandBox, CornerUsesMinimalTranslation) {
  // Oracle: among all in-frame 500-wide placements containing the box, the
  // chosen one is closest to the centered placement.
  const FrameDims frame{3840, 2160};
  for (int x = 0; x < 300; x += 7) {
    const RectPx box{x, 5, 20, 20};
    const RectPx out = expand_box(box, frame, 500, 500);
    const double ideal = x + 10 - 250.0;
    int best = -1;
    double best_d = 1e9;
    for (int s = 0; s + 500 <= frame.width; ++s) {
      const double dist = std::abs(s - ideal);
      if (dist < best_d - 1e-9) {
        best_d = dist;
        best = s;
      }
    }
    EXPECT_LE(std::abs(out.x - best), 1) << x;
    EXPECT_TRUE(out.contains(box));
  }
}

TEST(ExpandMinSize, PropertiesOnRandomData) {
  std::mt19937_64 rng(17);
  const FrameDims frame{3840, 2160};
  Dataset ds;
  for (int id = 0; id < 50; ++id) {
    ds.images.push_back({id, {}, frame});
    auto& set = ds.annotations[id];
    set.frame = frame;
    for (int k = 0; k < 20; ++k) {
      std::uniform_int_distribution<int> w(1, 900), h(1, 700);
      const int bw = w(rng), bh = h(rng);
      set.boxes.push_back({std::uniform_int_distribution<int>(0, frame.width - bw)(rng),
                           std::uniform_int_distribution<int>(0, frame.height - bh)(rng), bw, bh});
    }
  }
  const Dataset once = expand_min_size(ds);
  EXPECT_EQ(expand_min_size(once), once);
  for (const auto& [id, set] : once.annotations) {
    const auto& src = ds.annotations.at(id).boxes;
    for (std::size_t k = 0; k < set.boxes.size(); ++k) {
      const RectPx& b = set.boxes[k];
      const RectPx& s = src[k];
      ASSERT_EQ(b.w, std::max(s.w, 500));
      ASSERT_EQ(b.h, std::max(s.h, 500));
      ASSERT_TRUE(frame.contains(b));
      // Source center (in half pixels) lies inside the output.
      ASSERT_LE(2 * b.x, 2 * s.x + s.w);
      ASSERT_GE(2 * b.right(), 2 * s.x + s.w);
      ASSERT_LE(2 * b.y, 2 * s.y + s.h);
      ASSERT_GE(2 * b.bottom(), 2 * s.y + s.h);
    }
  }
}
