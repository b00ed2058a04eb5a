#pragma once

#include <random>

#include "roilink/protocol.hpp"

namespace wiregen {

using namespace roilink::wire;
using roilink::RectPx;

inline RectPx small_rect(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pos(0, 5000), side(0, 12);
  return {pos(rng), pos(rng), side(rng), side(rng)};
}

inline std::vector<std::uint8_t> bytes(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

/// Random valid message of any type.
inline WireMessage random_message(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(1, 8);
  std::uniform_int_distribution<int> small(0, 9);
  switch (kind(rng)) {
    case 1:
      return Hello{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                   static_cast<std::uint16_t>(rng()), static_cast<std::uint8_t>(rng() % 2),
                   static_cast<std::uint8_t>(rng())};
    case 2:
      return FrameMeta{rng(), rng(), static_cast<std::uint32_t>(rng()),
                       static_cast<std::uint32_t>(rng()), static_cast<std::uint16_t>(rng()),
                       static_cast<std::uint32_t>(rng() % 1000001)};
    case 3: {
      BaseLayer b{rng(), static_cast<std::uint32_t>(small(rng)), static_cast<std::uint32_t>(small(rng)), {}};
      b.pixels = bytes(rng, std::size_t{b.width} * b.height);
      return b;
    }
    case 4: {
      RoiList l{rng(), {}};
      const int n = small(rng);
      for (int i = 0; i < n; ++i) {
        const bool op = rng() % 2;
        l.entries.push_back({small_rect(rng), op ? RoiOrigin::OperatorRequested : RoiOrigin::Algorithmic,
                             op ? rng() : 0});
      }
      return l;
    }
    case 5: {
      RoiTile t{rng(), small_rect(rng), rng() % 2 ? RoiOrigin::OperatorRequested : RoiOrigin::Algorithmic, {}};
      t.pixels = bytes(rng, 3 * static_cast<std::size_t>(t.rect.area()));
      return t;
    }
    case 6:
      return CustomRoiRequest{rng(), small_rect(rng), rng() % 2 == 0};
    case 7:
      return Ack{rng(), rng(), static_cast<AckCode>(rng() % 5)};
    default:
      return Bye{};
  }
}

}  // namespace wiregen
