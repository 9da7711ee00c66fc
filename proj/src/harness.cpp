#include "vq2d/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace vq2d {

void Workload::validate() const {
  if (groups.empty()) throw InvalidArgument("workload has no video groups");
  std::set<std::string> videos;
  std::set<std::string> queries;
  for (const auto& g : groups) {
    if (!videos.insert(g.video_id).second) {
      throw InvalidArgument("video '" + g.video_id + "' appears in more than one group");
    }
    for (const auto& q : g.queries) {
      if (q.video_id != g.video_id) {
        throw InvalidArgument("query '" + q.query_id + "' of video '" + q.video_id +
                              "' filed under group '" + g.video_id + "'");
      }
      if (!queries.insert(q.query_id).second) {
        throw InvalidArgument("duplicate query_id '" + q.query_id + "'");
      }
      const auto gt = ground_truth.find(q.query_id);
      if (gt == ground_truth.end()) {
        throw InvalidArgument("query '" + q.query_id + "' has no ground truth");
      }
      if (gt->second.video_id() != q.video_id) {
        throw InvalidArgument("ground truth of query '" + q.query_id + "' is on another video");
      }
    }
  }
}

std::size_t Workload::num_queries() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.queries.size();
  return n;
}

void HarnessConfig::validate() const {
  if (workers < 1) throw InvalidArgument("harness needs at least one worker");
  if (videos_per_group < 1) throw InvalidArgument("videos_per_group must be >= 1");
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("VQ2D_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

QueryOutcome run_one(const FrameStore& store, const VisualQuery& q, const FrameScorer& scorer,
                     const PipelineConfig& pipeline) {
  QueryOutcome out;
  out.query_id = q.query_id;
  out.video_id = q.video_id;
  try {
    Retrieval r = run_query(store, q, scorer, pipeline);
    out.peak = r.peak;
    out.prediction = std::move(r.track);
    out.status = out.prediction ? OutcomeStatus::kAnswered : OutcomeStatus::kNoResponse;
  } catch (const std::exception& e) {
    out.status = OutcomeStatus::kError;
    out.peak.reset();
    out.prediction.reset();
    out.error = e.what();
  }
  return out;
}

std::vector<QueryOutcome> run_group(const std::vector<const VideoQueries*>& videos,
                                    const FrameStore& store, const FrameScorer& scorer,
                                    const PipelineConfig& pipeline) {
  auto attempt = [&] {
    std::vector<QueryOutcome> outcomes;
    for (const auto* v : videos) {
      for (const auto& q : v->queries) outcomes.push_back(run_one(store, q, scorer, pipeline));
    }
    return outcomes;
  };
  auto outcomes = attempt();
  const bool failed = std::any_of(outcomes.begin(), outcomes.end(), [](const QueryOutcome& o) {
    return o.status == OutcomeStatus::kError;
  });
  if (failed) outcomes = attempt();
  return outcomes;
}

}  // namespace

HarnessResult evaluate_parallel(const Workload& workload, const FrameStore& store,
                                const FrameScorer& scorer, const PipelineConfig& pipeline,
                                const HarnessConfig& cfg, const MetricConfig& metrics,
                                const ProgressCallback& progress) {
  workload.validate();
  cfg.validate();
  pipeline.tracker.validate();

  std::vector<const VideoQueries*> videos;
  for (const auto& g : workload.groups) videos.push_back(&g);
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::shuffle(videos.begin(), videos.end(), rng);

  std::vector<std::vector<const VideoQueries*>> tasks;
  for (std::size_t i = 0; i < videos.size(); i += cfg.videos_per_group) {
    const auto last = std::min(videos.size(), i + cfg.videos_per_group);
    tasks.emplace_back(videos.begin() + static_cast<std::ptrdiff_t>(i),
                       videos.begin() + static_cast<std::ptrdiff_t>(last));
  }

  const std::size_t total = workload.num_queries();
  std::vector<std::vector<QueryOutcome>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::size_t completed = 0;

  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
      slots[t] = run_group(tasks[t], store, scorer, pipeline);
      std::lock_guard lock(progress_mutex);
      completed += slots[t].size();
      if (progress) progress(completed, total);
    }
  };
  {
    const std::size_t n = std::min(cfg.workers, tasks.size());
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }

  HarnessResult result;
  for (auto& s : slots) {
    for (auto& o : s) result.outcomes.push_back(std::move(o));
  }
  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [](const QueryOutcome& a, const QueryOutcome& b) { return a.query_id < b.query_id; });
  for (const auto& o : result.outcomes) {
    switch (o.status) {
      case OutcomeStatus::kAnswered: ++result.answered; break;
      case OutcomeStatus::kNoResponse: ++result.no_response; break;
      case OutcomeStatus::kError: ++result.errored; break;
    }
  }
  const auto results = to_query_results(result.outcomes, workload.ground_truth);
  result.report = evaluate(results, metrics);
  return result;
}

std::vector<QueryResult> to_query_results(const std::vector<QueryOutcome>& outcomes,
                                          const std::map<std::string, ResponseTrack>& ground_truth) {
  std::vector<const QueryOutcome*> sorted;
  for (const auto& o : outcomes) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(),
            [](const QueryOutcome* a, const QueryOutcome* b) { return a->query_id < b->query_id; });
  std::vector<QueryResult> results;
  results.reserve(sorted.size());
  for (const auto* o : sorted) {
    const auto gt = ground_truth.find(o->query_id);
    if (gt == ground_truth.end()) {
      throw InvalidArgument("no ground truth for query '" + o->query_id + "'");
    }
    std::optional<ScoredTrack> pred;
    if (o->status == OutcomeStatus::kAnswered) pred = o->prediction;
    results.push_back({o->query_id, std::move(pred), gt->second});
  }
  return results;
}

}  // namespace vq2d
