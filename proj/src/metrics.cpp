#include "vq2d/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_set>

namespace vq2d {
namespace {

void check_results(std::span<const QueryResult> results) {
  std::unordered_set<std::string> seen;
  seen.reserve(results.size());
  for (const auto& r : results) {
    if (!seen.insert(r.query_id).second) {
      throw InvalidArgument("duplicate query_id '" + r.query_id + "'");
    }
    if (r.prediction && r.prediction->track().video_id() != r.ground_truth.video_id()) {
      throw InvalidArgument("query '" + r.query_id + "': prediction video '" +
                            r.prediction->track().video_id() + "' differs from ground truth '" +
                            r.ground_truth.video_id() + "'");
    }
  }
}

void check_threshold(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("IoU threshold must lie in (0, 1), got " + std::to_string(t));
  }
}

double pooled_ap(std::span<const QueryResult> results, double threshold,
                 const std::function<double(const ResponseTrack&, const ResponseTrack&)>& overlap) {
  check_threshold(threshold);
  check_results(results);
  if (results.empty()) throw InvalidArgument("no queries to evaluate");
  std::vector<RankedHit> ranked;
  ranked.reserve(results.size());
  for (const auto& r : results) {
    if (!r.prediction) continue;
    const bool hit = overlap(r.prediction->track(), r.ground_truth) >= threshold;
    ranked.push_back({r.prediction->confidence(), hit});
  }
  return average_precision(ranked, results.size());
}

}  // namespace

double average_precision(std::span<const RankedHit> ranked, std::size_t num_ground_truth) {
  if (num_ground_truth == 0) {
    throw InvalidArgument("average precision is undefined without ground truth");
  }
  std::vector<std::size_t> order(ranked.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranked[a].confidence > ranked[b].confidence;
  });

  double sum_precision = 0.0;
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!ranked[order[rank]].true_positive) continue;
    ++tp;
    sum_precision += static_cast<double>(tp) / static_cast<double>(rank + 1);
  }
  if (tp > num_ground_truth) {
    throw InvalidArgument("ranked list holds " + std::to_string(tp) + " true positives for " +
                          std::to_string(num_ground_truth) + " ground truths");
  }
  return sum_precision / static_cast<double>(num_ground_truth);
}

double st_ap(std::span<const QueryResult> results, double threshold) {
  return pooled_ap(results, threshold, [](const ResponseTrack& p, const ResponseTrack& g) {
    return st_iou(p, g);
  });
}

double t_ap(std::span<const QueryResult> results, double threshold) {
  return pooled_ap(results, threshold, [](const ResponseTrack& p, const ResponseTrack& g) {
    return temporal_iou(p.extent(), g.extent());
  });
}

double success_rate(std::span<const QueryResult> results, double threshold) {
  check_results(results);
  if (results.empty()) throw InvalidArgument("success rate over an empty result set");
  std::size_t hits = 0;
  for (const auto& r : results) {
    if (r.prediction && st_iou(r.prediction->track(), r.ground_truth) >= threshold) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

double recovery(std::span<const QueryResult> results, double box_threshold) {
  check_results(results);
  if (results.empty()) throw InvalidArgument("recovery over an empty result set");
  double total = 0.0;
  for (const auto& r : results) {
    if (!r.prediction) continue;
    const auto& gt = r.ground_truth;
    const auto& pred = r.prediction->track();
    std::size_t recovered = 0;
    for (std::int64_t f = gt.start().value(); f <= gt.end().value(); ++f) {
      const auto p = pred.box_at(FrameIndex(f));
      if (p && box_iou(*p, *gt.box_at(FrameIndex(f))) >= box_threshold) ++recovered;
    }
    total += static_cast<double>(recovered) / static_cast<double>(gt.size());
  }
  return 100.0 * total / static_cast<double>(results.size());
}

EvalReport evaluate(std::span<const QueryResult> results, const MetricConfig& cfg) {
  EvalReport report;
  report.st_ap_25 = st_ap(results, cfg.st_threshold);
  report.t_ap_25 = t_ap(results, cfg.t_threshold);
  report.success_rate = success_rate(results, cfg.success_threshold);
  report.recovery = recovery(results, cfg.recovery_box_threshold);
  report.num_queries = results.size();
  return report;
}

namespace {

constexpr std::size_t kNumIouThresholds = 10;
constexpr std::size_t kMaxRecallDetections = 10;

std::array<double, kNumIouThresholds> iou_thresholds() {
  std::array<double, kNumIouThresholds> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + 0.05 * static_cast<double>(i);
  return t;
}

// Detection indices of one frame in descending score order, stable.
std::vector<std::size_t> score_order(const FrameDetections& fd) {
  std::vector<std::size_t> order(fd.detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fd.detections[a].score > fd.detections[b].score;
  });
  return order;
}

}  // namespace

DetectionSummary frame_detection_eval(std::span<const FrameDetections> frames, FrameEvalMode mode) {
  std::vector<const FrameDetections*> used;
  std::size_t num_gt = 0;
  for (const auto& fd : frames) {
    if (fd.is_positive_frame != fd.gt_box.has_value()) {
      throw InvalidArgument("frame " + std::to_string(fd.frame.value()) +
                            ": gt_box must be present exactly on positive frames");
    }
    for (const auto& d : fd.detections) {
      if (!std::isfinite(d.score)) {
        throw InvalidArgument("frame " + std::to_string(fd.frame.value()) +
                              ": non-finite detection score");
      }
    }
    if (!fd.is_positive_frame && mode == FrameEvalMode::kPositiveOnly) continue;
    used.push_back(&fd);
    if (fd.is_positive_frame) ++num_gt;
  }
  if (num_gt == 0) throw InvalidArgument("frame detection eval needs at least one positive frame");

  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(used.size());
  for (const auto* fd : used) orders.push_back(score_order(*fd));

  const auto thresholds = iou_thresholds();
  std::array<double, kNumIouThresholds> ap{};
  std::array<double, kNumIouThresholds> recall{};
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    std::vector<RankedHit> ranked;
    std::size_t recalled = 0;
    for (std::size_t i = 0; i < used.size(); ++i) {
      const auto& fd = *used[i];
      bool gt_taken = false;
      for (std::size_t rank = 0; rank < orders[i].size(); ++rank) {
        const auto& det = fd.detections[orders[i][rank]];
        bool tp = false;
        if (fd.gt_box && !gt_taken && box_iou(det.box, *fd.gt_box) >= thresholds[t]) {
          tp = true;
          gt_taken = true;
          if (rank < kMaxRecallDetections) ++recalled;
        }
        ranked.push_back({det.score, tp});
      }
    }
    ap[t] = average_precision(ranked, num_gt);
    recall[t] = static_cast<double>(recalled) / static_cast<double>(num_gt);
  }

  DetectionSummary out;
  out.ap = std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
  out.ap50 = ap[0];
  out.ap75 = ap[5];
  out.ar10 = std::accumulate(recall.begin(), recall.end(), 0.0) / static_cast<double>(recall.size());
  return out;
}

}  // namespace vq2d
