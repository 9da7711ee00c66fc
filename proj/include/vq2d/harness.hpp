#pragma once

// Parallel evaluation over (video, queries) groups. Queries of one video run
// sequentially; groups of videos are spread over a worker pool. Outcomes are
// reduced in query_id order, so the report does not depend on the worker
// count or on scheduling.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vq2d/metrics.hpp"
#include "vq2d/pipeline.hpp"

namespace vq2d {

struct VideoQueries {
  std::string video_id;
  std::vector<VisualQuery> queries;
};

struct Workload {
  std::vector<VideoQueries> groups;
  std::map<std::string, ResponseTrack> ground_truth;

  // Every query's video appears in exactly one group and every query has
  // ground truth on that video. Throws InvalidArgument otherwise.
  void validate() const;
  std::size_t num_queries() const;
};

struct HarnessConfig {
  std::size_t workers = 1;
  std::uint64_t shuffle_seed = 0;
  std::size_t videos_per_group = 1;

  void validate() const;
};

// Worker count from the VQ2D_WORKERS environment variable, falling back to
// the number of hardware threads.
std::size_t default_worker_count();

enum class OutcomeStatus { kAnswered, kNoResponse, kError };

struct QueryOutcome {
  std::string query_id;
  std::string video_id;
  OutcomeStatus status = OutcomeStatus::kNoResponse;
  std::optional<Peak> peak;
  std::optional<ScoredTrack> prediction;
  std::string error;  // set for kError

  friend bool operator==(const QueryOutcome&, const QueryOutcome&) = default;
};

struct HarnessResult {
  EvalReport report;
  std::vector<QueryOutcome> outcomes;  // sorted by query_id
  std::size_t answered = 0;
  std::size_t no_response = 0;
  std::size_t errored = 0;
};

// Called after each finished group with (completed queries, total queries).
using ProgressCallback = std::function<void(std::size_t, std::size_t)>;

// Runs every query and scores the outcomes. A group whose queries raise is
// retried once; queries still failing are reported as errors and count as
// unanswered. Throws InvalidArgument for an empty or invalid workload.
HarnessResult evaluate_parallel(const Workload& workload, const FrameStore& store,
                                const FrameScorer& scorer, const PipelineConfig& pipeline,
                                const HarnessConfig& cfg, const MetricConfig& metrics = {},
                                const ProgressCallback& progress = {});

// Pairs outcomes with ground truth (in query_id order) for the metric layer.
std::vector<QueryResult> to_query_results(const std::vector<QueryOutcome>& outcomes,
                                          const std::map<std::string, ResponseTrack>& ground_truth);

}  // namespace vq2d
