#pragma once

#include <map>
#include <random>

#include "oracles.hpp"
#include "roilink/dataset.hpp"

namespace fixture {

using roilink::Dataset;
using roilink::ProposalSet;

struct Scored {
  Dataset dataset;
  std::map<std::int64_t, ProposalSet> proposals;
};

/// Random images with random GT and scored proposals.
inline Scored random_scored(std::mt19937_64& rng, int images, int side, int max_boxes) {
  Scored out;
  std::uniform_int_distribution<int> dim(8, side), count(0, max_boxes);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int id = 1; id <= images; ++id) {
    const roilink::FrameDims d{dim(rng), dim(rng)};
    out.dataset.images.push_back({id, "img" + std::to_string(id), d});
    auto& gt = out.dataset.annotations[id];
    gt.frame = d;
    for (int k = count(rng); k > 0; --k) gt.boxes.push_back(oracle::random_rect(rng, d.width, d.height));
    auto& p = out.proposals[id];
    p.frame = d;
    for (int k = count(rng); k > 0; --k) {
      p.boxes.push_back({oracle::random_rect(rng, d.width, d.height), conf(rng)});
    }
  }
  return out;
}

}  // namespace fixture
