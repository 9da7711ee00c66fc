#pragma once

// Retrieval metrics for visual-query localization (stAP, tAP, success rate,
// recovery) and frame-level detection AP/AR.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vq2d/core.hpp"

namespace vq2d {

struct QueryResult {
  std::string query_id;
  std::optional<ScoredTrack> prediction;
  ResponseTrack ground_truth;
};

struct RankedHit {
  double confidence;
  bool true_positive;
};

struct MetricConfig {
  double st_threshold = 0.25;
  double t_threshold = 0.25;
  double success_threshold = 0.05;
  double recovery_box_threshold = 0.5;
};

struct EvalReport {
  double st_ap_25 = 0.0;
  double t_ap_25 = 0.0;
  double success_rate = 0.0;  // percent
  double recovery = 0.0;      // percent
  std::size_t num_queries = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Uninterpolated all-points average precision. Entries are ranked by
// descending confidence, ties keep their input order. Throws
// InvalidArgument when num_ground_truth is 0 or the list holds more true
// positives than ground truths.
double average_precision(std::span<const RankedHit> ranked, std::size_t num_ground_truth);

// AP over the pooled per-query predictions; a prediction is a hit when its
// tube IoU with the ground truth reaches threshold. Unanswered queries count
// as missed ground truths.
double st_ap(std::span<const QueryResult> results, double threshold);

// Same as st_ap but matching on the temporal IoU of the [s, e] extents.
double t_ap(std::span<const QueryResult> results, double threshold);

// Percentage of queries answered with st_iou >= threshold.
double success_rate(std::span<const QueryResult> results, double threshold = 0.05);

// Mean over queries of the fraction of ground-truth frames whose box is
// recovered with box IoU >= box_threshold, as a percentage.
double recovery(std::span<const QueryResult> results, double box_threshold = 0.5);

EvalReport evaluate(std::span<const QueryResult> results, const MetricConfig& cfg = {});

// Frame-level detection evaluation.

struct FrameDetections {
  FrameIndex frame;
  bool is_positive_frame = false;
  std::vector<ScoredBox> detections;
  std::optional<Box> gt_box;  // present iff is_positive_frame
};

enum class FrameEvalMode { kPositiveOnly, kPositiveAndNegative };

struct DetectionSummary {
  double ap = 0.0;    // mean over IoU 0.50:0.05:0.95
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ar10 = 0.0;  // recall with at most 10 detections per frame, same thresholds
};

// COCO-style greedy matching per frame. In kPositiveAndNegative mode every
// detection on a negative frame is a false positive; kPositiveOnly drops
// negative frames before scoring. Throws InvalidArgument when no positive
// frame remains or a frame's gt_box disagrees with is_positive_frame.
DetectionSummary frame_detection_eval(std::span<const FrameDetections> frames, FrameEvalMode mode);

}  // namespace vq2d
