#pragma once

// Brute-force reference implementations used only by the tests. They follow
// the metric definitions literally and share no code with the library.

#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

#include "vq2d/core.hpp"
#include "vq2d/metrics.hpp"

namespace vq2d::oracle {

// Rank of entry i: entries with a higher confidence come first, then equal
// confidences that appear earlier in the input.
inline std::size_t rank_of(const std::vector<RankedHit>& hits, std::size_t i) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < hits.size(); ++j) {
    if (hits[j].confidence > hits[i].confidence) ++r;
    if (hits[j].confidence == hits[i].confidence && j < i) ++r;
  }
  return r;
}

// Integrates the raw precision/recall staircase: for every prefix of the
// ranked list, precision(prefix) times the recall gained by its last entry.
inline double average_precision(const std::vector<RankedHit>& hits, std::size_t num_gt) {
  std::vector<bool> ranked(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) ranked[rank_of(hits, i)] = hits[i].true_positive;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    std::size_t tp = 0;
    for (std::size_t j = 0; j < k; ++j) tp += ranked[j] ? 1 : 0;
    const double precision = static_cast<double>(tp) / static_cast<double>(k);
    const double recall = static_cast<double>(tp) / static_cast<double>(num_gt);
    ap += precision * (recall - prev_recall);
    prev_recall = recall;
  }
  return ap;
}

// Unit cells (frame, x, y) covered by a track with integer-valued boxes.
inline std::set<std::tuple<std::int64_t, int, int>> voxels(const ResponseTrack& t) {
  std::set<std::tuple<std::int64_t, int, int>> cells;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Box& b = t.boxes()[i];
    for (int x = static_cast<int>(b.x()); x < static_cast<int>(b.right()); ++x) {
      for (int y = static_cast<int>(b.y()); y < static_cast<int>(b.bottom()); ++y) {
        cells.emplace(t.start().value() + static_cast<std::int64_t>(i), x, y);
      }
    }
  }
  return cells;
}

inline double voxel_iou(const ResponseTrack& a, const ResponseTrack& b) {
  const auto va = voxels(a);
  const auto vb = voxels(b);
  std::size_t inter = 0;
  for (const auto& c : va) inter += vb.count(c);
  const std::size_t uni = va.size() + vb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vq2d::oracle
