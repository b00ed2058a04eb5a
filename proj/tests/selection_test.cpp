#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "roilink/error.hpp"
#include "roilink/selection.hpp"

using namespace roilink;

namespace {

ProposalSet three_boxes(bool scored) {
  // Disjoint boxes of 3000, 2000 and 1000 pixels in a 100x100 frame.
  ProposalSet p;
  p.frame = {100, 100};
  p.boxes = {{{0, 0, 60, 50}, scored ? std::optional(0.9) : std::nullopt},
             {{0, 50, 40, 50}, scored ? std::optional(0.8) : std::nullopt},
             {{60, 0, 40, 25}, scored ? std::optional(0.7) : std::nullopt}};
  return p;
}

ProposalSet random_set(std::mt19937_64& rng, int max_boxes, int side, bool scored) {
  std::uniform_int_distribution<int> count(0, max_boxes);
  std::uniform_int_distribution<int> dim(4, side);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  ProposalSet p;
  p.frame = {dim(rng), dim(rng)};
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    ScoredBox b{oracle::random_rect(rng, p.frame.width, p.frame.height), std::nullopt};
    if (scored) b.confidence = conf(rng);
    p.boxes.push_back(b);
  }
  return p;
}

std::vector<RectPx> rects_of(const ProposalSet& p) {
  std::vector<RectPx> out;
  for (const auto& b : p.boxes) out.push_back(b.rect);
  return out;
}

}  // namespace

TEST(Select, FullBudgetTakesEverything) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_set(rng, 10, 50, true);
    for (auto mode : {SelectionMode::AreaGreedy, SelectionMode::ConfidencePrefix}) {
      const auto sel = select(p, 1.0, {mode, Accounting::UnionPixels, {}});
      EXPECT_EQ(sel.full.size(), p.boxes.size());
      EXPECT_FALSE(sel.shrunk.has_value());
    }
  }
}

TEST(Select, ZeroBudgetSelectsNothing) {
  const auto p = three_boxes(true);
  for (auto mode : {SelectionMode::AreaGreedy, SelectionMode::ConfidencePrefix}) {
    const auto sel = select(p, 0.0, {mode, Accounting::UnionPixels, {}});
    EXPECT_TRUE(sel.rects(p).empty());
  }
}

TEST(Select, AreaGreedyExample) {
  const auto p = three_boxes(false);
  ASSERT_EQ(p.boxes[0].rect.area(), 3000);
  ASSERT_EQ(p.boxes[1].rect.area(), 2000);
  ASSERT_EQ(p.boxes[2].rect.area(), 1000);
  // {3000, 1000} is the best subset within 4500 px.
  EXPECT_EQ(oracle::best_subset(rects_of(p), 4500, true, 100), 4000);

  const auto sel = select(p, 0.45, {});
  EXPECT_EQ(sel.budget, 4500);
  EXPECT_EQ(sel.full, (std::vector<std::size_t>{0, 2}));
  ASSERT_TRUE(sel.shrunk.has_value());
  EXPECT_EQ(sel.shrunk->source, 1u);
  EXPECT_LE(sel.shrunk->rect.area(), 500);
  EXPECT_TRUE(p.boxes[1].rect.contains(sel.shrunk->rect));
  EXPECT_EQ(sel.shrunk->rect, concentric_fit(p.boxes[1].rect, 500));
}

TEST(Select, ConfidencePrefixExample) {
  const auto p = three_boxes(true);
  const auto sel = select(p, 0.45, {SelectionMode::ConfidencePrefix, Accounting::UnionPixels, {}});
  // Hand trace: take 0.9 (3000 <= 4500); 0.8 would reach 5000 so it is shrunk
  // into the 1500 left over and the scan stops; 0.7 is dropped.
  EXPECT_EQ(sel.full, (std::vector<std::size_t>{0}));
  ASSERT_TRUE(sel.shrunk.has_value());
  EXPECT_EQ(sel.shrunk->source, 1u);
  EXPECT_LE(sel.shrunk->rect.area(), 1500);
  EXPECT_EQ(sel.shrunk->rect, concentric_fit(p.boxes[1].rect, 1500));
  EXPECT_EQ(sel.rects(p).size(), 2u);
}

TEST(Select, ConfidencePrefixNeedsScores) {
  EXPECT_THROW(select(three_boxes(false), 0.5,
                      {SelectionMode::ConfidencePrefix, Accounting::UnionPixels, {}}),
               SelectionError);
}

TEST(Select, InvalidPortion) {
  EXPECT_THROW(select(three_boxes(false), 1.2, {}), ConfigError);
  EXPECT_THROW(select(three_boxes(false), -0.1, {}), ConfigError);
  SelectionPolicy bad;
  bad.exact_small_n = 21;
  EXPECT_THROW(select(three_boxes(false), 0.5, bad), ConfigError);
}

TEST(Select, UnionShrinkUsesMarginalCharge) {
  // The leftover box overlaps the selection, so a shrunk copy may be larger
  // than the raw leftover budget as long as its new pixels fit.
  ProposalSet p;
  p.frame = {100, 100};
  p.boxes = {{{0, 0, 50, 50}, std::nullopt}, {{0, 0, 60, 60}, std::nullopt}};
  const auto sel = select_with_budget(p, 2600, {});
  ASSERT_EQ(sel.full, (std::vector<std::size_t>{0}));
  ASSERT_TRUE(sel.shrunk.has_value());
  const auto rects = sel.rects(p);
  EXPECT_LE(union_area(rects), 2600);
  EXPECT_GT(sel.shrunk->rect.area(), 100);
}

TEST(Select, BudgetNeverExceeded) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20000; ++i) {
    const auto p = random_set(rng, 12, 80, true);
    std::uniform_real_distribution<double> ru(0.0, 1.0);
    const double r = ru(rng);
    const Area budget = pixel_budget(r, p.frame);
    for (auto acc : {Accounting::UnionPixels, Accounting::SumOfCropAreas}) {
      for (auto mode : {SelectionMode::AreaGreedy, SelectionMode::ConfidencePrefix}) {
        const auto sel = select(p, r, {mode, acc, {}});
        const auto rects = sel.rects(p);
        ASSERT_LE(accounted_area(rects, acc), budget);
        for (const auto& rc : rects) ASSERT_TRUE(p.frame.contains(rc));
        if (sel.shrunk) ASSERT_TRUE(p.boxes[sel.shrunk->source].rect.contains(sel.shrunk->rect));
      }
    }
  }
}

TEST(Select, ExactSmallNMatchesEnumeration) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 150; ++i) {
    const auto p = random_set(rng, 10, 48, false);
    std::uniform_real_distribution<double> ru(0.0, 0.8);
    const double r = ru(rng);
    const Area budget = pixel_budget(r, p.frame);
    for (auto acc : {Accounting::UnionPixels, Accounting::SumOfCropAreas}) {
      SelectionPolicy pol{SelectionMode::AreaGreedy, acc, 12};
      const auto sel = select(p, r, pol);
      std::vector<RectPx> full;
      for (auto k : sel.full) full.push_back(p.boxes[k].rect);
      const bool uni = acc == Accounting::UnionPixels;
      ASSERT_EQ(accounted_area(full, acc),
                oracle::best_subset(rects_of(p), budget, uni, 48))
          << "case " << i;
      ASSERT_LE(accounted_area(sel.rects(p), acc), budget);
    }
  }
}

TEST(Select, ConfidencePrefixIsMonotoneInBudget) {
  std::mt19937_64 rng(31);
  const SelectionPolicy pol{SelectionMode::ConfidencePrefix, Accounting::UnionPixels, {}};
  for (int i = 0; i < 500; ++i) {
    const auto p = random_set(rng, 10, 60, true);
    std::uniform_real_distribution<double> ru(0.0, 1.0);
    double r1 = ru(rng), r2 = ru(rng);
    if (r1 > r2) std::swap(r1, r2);
    const auto a = select(p, r1, pol);
    const auto b = select(p, r2, pol);
    ASSERT_LE(a.full.size(), b.full.size());
    ASSERT_TRUE(std::equal(a.full.begin(), a.full.end(), b.full.begin()));
    if (a.shrunk) {
      const bool promoted =
          std::find(b.full.begin(), b.full.end(), a.shrunk->source) != b.full.end();
      if (!promoted) {
        ASSERT_TRUE(b.shrunk.has_value());
        ASSERT_EQ(b.shrunk->source, a.shrunk->source);
        ASSERT_TRUE(b.shrunk->rect.contains(a.shrunk->rect));
      }
    }
  }
}

TEST(Select, DeterministicUnderTies) {
  ProposalSet p;
  p.frame = {50, 50};
  // Equal areas and equal confidences: order falls back to (y, x, w, h).
  p.boxes = {{{30, 0, 10, 10}, 0.5}, {{0, 0, 10, 10}, 0.5}, {{0, 20, 10, 10}, 0.5}};
  const auto g = select_with_budget(p, 200, {});
  EXPECT_EQ(g.full, (std::vector<std::size_t>{1, 0}));
  const auto c = select_with_budget(p, 200, {SelectionMode::ConfidencePrefix, Accounting::UnionPixels, {}});
  EXPECT_EQ(c.full, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(select_with_budget(p, 150, {}).full, select_with_budget(p, 150, {}).full);
}

TEST(Select, CommittedRectsChargeFirst) {
  ProposalSet p;
  p.frame = {100, 100};
  p.boxes = {{{50, 50, 50, 50}, std::nullopt}};
  const std::vector<RectPx> committed{{0, 0, 40, 20}};  // 800 px
  const auto sel = select_with_budget(p, 1000, {}, committed);
  EXPECT_TRUE(sel.full.empty());
  ASSERT_TRUE(sel.shrunk.has_value());
  EXPECT_LE(sel.shrunk->rect.area(), 200);
}
