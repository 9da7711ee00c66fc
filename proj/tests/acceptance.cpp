// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "generators.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "vq2d/cli.hpp"
#include "vq2d/io.hpp"
#include "vq2d/metrics.hpp"
#include "vq2d/sampler.hpp"
#include "vq2d/synth.hpp"

using namespace vq2d;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o, double secs) {
  if (!o.pass) ++g_failures;
  std::printf("[%s] %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  report(id, name, o, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 1. AP against the PR-staircase oracle

Outcome ap_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  Outcome o;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(0, 32)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<RankedHit> hits;
    std::size_t tps = 0;
    for (int i = 0; i < n; ++i) {
      const double conf = std::uniform_int_distribution<int>(0, levels)(rng) / static_cast<double>(levels);
      const bool tp = std::bernoulli_distribution(0.4)(rng);
      tps += tp ? 1 : 0;
      hits.push_back({conf, tp});
    }
    const std::size_t num_gt = std::max<std::size_t>(1, tps + std::uniform_int_distribution<std::size_t>(0, 10)(rng));
    const double got = average_precision(hits, num_gt);
    const double want = oracle::average_precision(hits, num_gt);
    worst = std::max(worst, std::abs(got - want));
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-12, "max |AP - oracle| too large");
  o.require(secs < 10.0, "runtime above 10 s");
  std::ostringstream d;
  d << "1000 lists, max |AP - oracle| = " << worst;
  if (o.pass) o.detail = d.str();
  else o.detail += "; " + d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 2. Geometry properties

class TrackGen {
 public:
  explicit TrackGen(std::uint64_t seed) : rng_(seed) {}

  // Coordinates on a 1/16 pixel grid keep translations exact.
  double coord(double lo, double hi) {
    const int steps = static_cast<int>((hi - lo) * 16);
    return lo + std::uniform_int_distribution<int>(0, steps)(rng_) / 16.0;
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Box box() { return Box(coord(0, 200), coord(0, 200), coord(1.0 / 16, 64), coord(1.0 / 16, 64)); }

  Box jitter(const Box& b) {
    return Box(b.x() + coord(-8, 8), b.y() + coord(-8, 8), std::max(1.0 / 16, b.w() + coord(-8, 8)),
               std::max(1.0 / 16, b.h() + coord(-8, 8)));
  }

  ResponseTrack track(std::int64_t start, int len) {
    std::vector<Box> boxes;
    for (int i = 0; i < len; ++i) boxes.push_back(box());
    return ResponseTrack("v", FrameIndex(start), std::move(boxes));
  }

  // Either independent or a jittered, time-shifted copy of `a`.
  ResponseTrack partner(const ResponseTrack& a) {
    if (integer(0, 2) == 0) return track(integer(0, 30), integer(1, 15));
    const std::int64_t start = std::max<std::int64_t>(0, a.start().value() + integer(-5, 5));
    std::vector<Box> boxes;
    const int len = integer(1, 15);
    for (int i = 0; i < len; ++i) boxes.push_back(jitter(a.boxes()[static_cast<std::size_t>(i) % a.size()]));
    return ResponseTrack("v", FrameIndex(start), std::move(boxes));
  }

 private:
  std::mt19937_64 rng_;
};

ResponseTrack shifted(const ResponseTrack& t, double dx, double dy, std::int64_t dt) {
  std::vector<Box> boxes;
  for (const auto& b : t.boxes()) boxes.push_back(b.translated(dx, dy));
  return ResponseTrack(t.video_id(), t.start() + dt, std::move(boxes));
}

Outcome geometry_properties() {
  const auto t0 = Clock::now();
  TrackGen gen(77);
  Outcome o;
  constexpr double kTol = 1e-12;
  for (int i = 0; i < 10000 && o.pass; ++i) {
    const auto a = gen.track(gen.integer(0, 30), gen.integer(1, 15));
    const auto b = gen.partner(a);

    const double st = st_iou(a, b);
    o.require(std::abs(st - st_iou(b, a)) <= kTol, "st_iou not symmetric");
    o.require(st >= 0.0 && st <= 1.0, "st_iou out of [0, 1]");
    o.require(st_iou(a, a) == 1.0, "st_iou(a, a) != 1");

    const double ti = temporal_iou(a.extent(), b.extent());
    o.require(std::abs(ti - temporal_iou(b.extent(), a.extent())) <= kTol, "temporal_iou not symmetric");
    o.require(ti >= 0.0 && ti <= 1.0, "temporal_iou out of [0, 1]");
    o.require(temporal_iou(a.extent(), a.extent()) == 1.0, "temporal_iou(a, a) != 1");

    const Box& ba = a.boxes().front();
    const Box& bb = b.boxes().front();
    const double bi = box_iou(ba, bb);
    o.require(std::abs(bi - box_iou(bb, ba)) <= kTol, "box_iou not symmetric");
    o.require(bi >= 0.0 && bi <= 1.0, "box_iou out of [0, 1]");
    o.require(box_iou(ba, ba) == 1.0, "box_iou(a, a) != 1");

    // Single-frame tracks on the same frame reduce to box_iou.
    const std::int64_t f = gen.integer(0, 50);
    const ResponseTrack sa("v", FrameIndex(f), {ba});
    const ResponseTrack sb("v", FrameIndex(f), {bb});
    o.require(std::abs(st_iou(sa, sb) - bi) <= kTol, "single-frame st_iou != box_iou");

    // Common spatial and temporal shifts change nothing.
    const double dx = gen.coord(-50, 50);
    const double dy = gen.coord(-50, 50);
    const std::int64_t dt = gen.integer(0, 40);
    o.require(std::abs(st_iou(shifted(a, dx, dy, dt), shifted(b, dx, dy, dt)) - st) <= kTol,
              "st_iou not translation invariant");
    o.require(std::abs(box_iou(ba.translated(dx, dy), bb.translated(dx, dy)) - bi) <= kTol,
              "box_iou not translation invariant");
    o.require(std::abs(temporal_iou(shifted(a, 0, 0, dt).extent(), shifted(b, 0, 0, dt).extent()) - ti) <= kTol,
              "temporal_iou not translation invariant");
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime above 30 s");
  if (o.pass) o.detail = "10000 track pairs, all properties hold";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Metric monotonicity and ranking invariance

std::vector<QueryResult> random_results(std::mt19937_64& rng, TrackGen& gen, int levels) {
  const int n = std::uniform_int_distribution<int>(1, 30)(rng);
  std::vector<QueryResult> out;
  for (int i = 0; i < n; ++i) {
    const std::string video = "v" + std::to_string(i);
    const auto base = gen.track(gen.integer(0, 30), gen.integer(1, 12));
    const ResponseTrack gt(video, base.start(), base.boxes());
    std::optional<ScoredTrack> pred;
    if (gen.integer(0, 5) != 0) {
      const int kind = gen.integer(0, 2);
      const auto p = kind == 0   ? gen.track(gen.integer(0, 30), gen.integer(1, 12))
                     : kind == 1 ? gen.partner(base)
                                 : shifted(base, gen.coord(-6, 6), gen.coord(-6, 6), 0);
      const double conf = gen.integer(0, levels) / static_cast<double>(levels);
      pred.emplace(ResponseTrack(video, p.start(), p.boxes()), conf);
    }
    out.push_back({"q" + std::to_string(i), std::move(pred), gt});
  }
  return out;
}

std::vector<QueryResult> rescaled(std::vector<QueryResult> rs, const std::function<double(double)>& f) {
  for (auto& r : rs) {
    if (r.prediction) r.prediction = ScoredTrack(r.prediction->track(), f(r.prediction->confidence()));
  }
  return rs;
}

Outcome metric_monotonicity() {
  std::mt19937_64 rng(99);
  TrackGen gen(100);
  Outcome o;
  double sum_gap = 0.0;
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const auto rs = random_results(rng, gen, trial % 2 ? 8 : 1024);
    const double a25 = st_ap(rs, 0.25);
    const double a50 = st_ap(rs, 0.5);
    const double a75 = st_ap(rs, 0.75);
    o.require(a25 >= a50 && a50 >= a75, "st_ap not monotone in the threshold");
    sum_gap += a25 - a75;
    for (const auto& f : std::vector<std::function<double(double)>>{
             [](double c) { return 8.0 * c - 3.0; }, [](double c) { return std::exp(c); },
             [](double c) { return c * c * c + 0.5; }}) {
      const auto warped = rescaled(rs, f);
      o.require(st_ap(warped, 0.25) == a25 && st_ap(warped, 0.5) == a50 && st_ap(warped, 0.75) == a75,
                "st_ap changed under a monotone confidence rescaling");
    }
  }
  if (o.pass) {
    std::ostringstream d;
    d << "200 result sets, mean stAP25 - stAP75 = " << sum_gap / 200.0;
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------------------
// 4. Negative frames only matter to pos+neg evaluation

Outcome negative_frame_direction() {
  std::mt19937_64 rng(5);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Outcome o;
  double pos_only_mean = 0, pos_neg_mean = 0;
  constexpr int kSets = 100;
  for (int s = 0; s < kSets && o.pass; ++s) {
    std::vector<FrameDetections> clean;
    const int positives = 1 + s % 6;
    const int negatives = 1 + s % 5;
    std::int64_t frame = 0;
    for (int i = 0; i < positives; ++i) {
      const Box gt(uni(0, 100), uni(0, 100), uni(10, 40), uni(10, 40));
      FrameDetections f{FrameIndex(frame++), true, {}, gt};
      f.detections.push_back({gt.translated(uni(-2, 2), uni(-2, 2)), uni(0.3, 0.9)});
      f.detections.push_back({Box(uni(150, 200), uni(150, 200), 10, 10), uni(0.0, 0.5)});
      clean.push_back(std::move(f));
    }
    for (int i = 0; i < negatives; ++i) clean.push_back({FrameIndex(frame++), false, {}, std::nullopt});

    auto noisy = clean;
    for (auto& f : noisy) {
      if (f.is_positive_frame) continue;
      const int k = 1 + static_cast<int>(uni(0, 4));
      for (int j = 0; j < k; ++j) f.detections.push_back({Box(uni(0, 100), uni(0, 100), 20, 20), uni(0.95, 1.0)});
    }

    const auto clean_po = frame_detection_eval(clean, FrameEvalMode::kPositiveOnly);
    const auto clean_pn = frame_detection_eval(clean, FrameEvalMode::kPositiveAndNegative);
    const auto noisy_po = frame_detection_eval(noisy, FrameEvalMode::kPositiveOnly);
    const auto noisy_pn = frame_detection_eval(noisy, FrameEvalMode::kPositiveAndNegative);
    o.require(clean_po.ap == clean_pn.ap && clean_po.ap50 == clean_pn.ap50,
              "clean negative frames changed the AP");
    o.require(noisy_po.ap == clean_po.ap, "pos-only AP reacted to negative-frame detections");
    o.require(noisy_pn.ap < noisy_po.ap, "pos+neg AP not below pos-only AP with spurious detections");
    pos_only_mean += noisy_po.ap;
    pos_neg_mean += noisy_pn.ap;
  }
  if (o.pass) {
    std::ostringstream d;
    d.precision(4);
    d << kSets << " sets, mean AP pos-only " << pos_only_mean / kSets << " vs pos+neg " << pos_neg_mean / kSets;
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. Sampler truth table and 1:64 balancing

Outcome sampler_truth_table() {
  Outcome o;
  const ResponseTrack gt("v", FrameIndex(10), std::vector<Box>(6, Box(0, 0, 10, 10)));
  const GroundTruthContext ctx{"v", gt};
  int rows = 0;
  for (const bool same_video : {true, false}) {
    for (const bool inside : {true, false}) {
      for (const bool high_iou : {true, false}) {
        const Proposal p{"p", same_video ? "v" : "w", FrameIndex(inside ? 12 : 30),
                         high_iou ? Box(0, 0, 10, 7) : Box(0, 0, 10, 3), std::nullopt};
        const bool expect_positive = same_video && inside && high_iou;
        const NegativeReason expect_reason = !same_video ? NegativeReason::kOtherVideo
                                             : !inside   ? NegativeReason::kOutsideTrack
                                             : !high_iou ? NegativeReason::kLowOverlap
                                                         : NegativeReason::kNone;
        o.require((classify_proposal(p, ctx) == ProposalLabel::kPositive) == expect_positive,
                  "wrong label in the truth table");
        o.require(negative_reason(p, ctx) == expect_reason, "wrong negative reason in the truth table");
        ++rows;
      }
    }
  }

  std::mt19937_64 rng(8);
  auto make_negs = [&](std::size_t n) {
    std::vector<Proposal> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({"n" + std::to_string(i), "w", FrameIndex(static_cast<std::int64_t>(i)), Box(0, 0, 5, 5),
                     std::uniform_real_distribution<double>(0, 1)(rng)});
    }
    return out;
  };
  const Proposal pos{"pos", "v", FrameIndex(12), Box(0, 0, 10, 10), 0.0};
  int batches = 0;
  for (std::size_t num_pos = 1; num_pos <= 4; ++num_pos) {
    const std::vector<Proposal> positives(num_pos, pos);
    for (const std::size_t supply : {64 * num_pos, 64 * num_pos + 1, 200 * num_pos, 64 * num_pos - 1, num_pos}) {
      const auto negs = make_negs(supply);
      const Batch b = balance_batch(positives, negs, BatchSpec{}, 11 + supply);
      const bool enough = supply >= 64 * num_pos;
      o.require(b.positives.size() == num_pos, "positives dropped");
      o.require(b.negatives.size() == (enough ? 64 * num_pos : supply), "wrong negative count");
      o.require(b.under_filled == !enough, "scarcity flag wrong");
      ++batches;
    }
  }
  if (o.pass) {
    o.detail = std::to_string(rows) + " truth-table rows, " + std::to_string(batches) +
               " batches at exactly 64 negatives per positive or flagged";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 6-8. End-to-end runs on synthetic data

struct CliRun {
  int code = 0;
  std::string err;
  double seconds = 0;
};

CliRun cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv{"vq2d"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int code = cli::run(argv, out, err);
  return {code, err.str(), seconds_since(t0)};
}

struct SynthRun {
  synth::SynthDataset dataset;
  EvalReport report;
  std::vector<QueryOutcome> predictions;
  std::string predictions_text;
  std::string report_text;
  double infer_seconds = 0;
};

// synth + infer + evaluate through the command line.
SynthRun synth_and_infer(const fs::path& dir, const std::vector<std::string>& synth_flags, int workers,
                         bool regenerate = true) {
  SynthRun run;
  synth::SynthConfig cfg;
  cfg.num_videos = 50;
  cfg.frames_per_video = 60;
  for (const auto& f : synth_flags) {
    if (f == "--distractor-similar") cfg.distractor_similar = true;
    if (f == "--blur-background") cfg.blur_background = true;
  }
  if (regenerate) {
    fs::remove_all(dir);
    std::vector<std::string> args{"synth", "--out", dir.string(), "--videos", "50", "--frames", "60"};
    args.insert(args.end(), synth_flags.begin(), synth_flags.end());
    const auto r = cli(args);
    if (r.code != 0) throw std::runtime_error("synth failed: " + r.err);
  }
  // The dataset description is recomputed in memory; it is what synth wrote.
  for (std::size_t i = 0; i < cfg.num_videos; ++i) run.dataset.videos.push_back(synth::render_video(cfg, i).info);

  const std::string tag = "w" + std::to_string(workers);
  const fs::path pred = dir / ("pred_" + tag + ".jsonl");
  const fs::path rep = dir / ("report_" + tag + ".json");
  const auto inf = cli({"infer", "--annotations", (dir / "annotations.jsonl").string(), "--frames",
                        (dir / "frames").string(), "--out", pred.string(), "--workers", std::to_string(workers)});
  if (inf.code != 0) throw std::runtime_error("infer failed: " + inf.err);
  run.infer_seconds = inf.seconds;
  const auto ev = cli({"evaluate", "--predictions", pred.string(), "--annotations",
                       (dir / "annotations.jsonl").string(), "--out", rep.string()});
  if (ev.code != 0) throw std::runtime_error("evaluate failed: " + ev.err);

  run.predictions_text = io::read_text(pred);
  run.report_text = io::read_text(rep);
  run.predictions = io::parse_predictions(run.predictions_text);
  const auto j = nlohmann::json::parse(run.report_text);
  run.report = EvalReport{j.at("st_ap_25").get<double>(), j.at("t_ap_25").get<double>(),
                          j.at("success_rate").get<double>(), j.at("recovery").get<double>(),
                          j.at("num_queries").get<std::size_t>()};
  return run;
}

std::string fmt_report(const EvalReport& r) {
  std::ostringstream d;
  d.precision(4);
  d << "stAP25 " << r.st_ap_25 << ", tAP25 " << r.t_ap_25 << ", success " << r.success_rate << "%, recovery "
    << r.recovery << "%";
  return d.str();
}

// Peaks that land on the distractor while it is visible.
std::size_t false_peaks_on_distractor(const SynthRun& run) {
  std::size_t hits = 0;
  for (const auto& o : run.predictions) {
    if (!o.peak) continue;
    for (const auto& v : run.dataset.videos) {
      if (v.video_id != o.video_id || !v.distractor_span) continue;
      if (v.distractor_span->contains(o.peak->frame) && !v.target_span.contains(o.peak->frame) &&
          box_iou(o.peak->box, *v.distractor_box) >= 0.5) {
        ++hits;
      }
    }
  }
  return hits;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "vq2d_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  std::printf("acceptance: %u hardware thread(s)\n", cores);

  run_criterion(1, "AP oracle equivalence", ap_oracle);
  run_criterion(2, "geometry properties", geometry_properties);
  run_criterion(3, "metric monotonicity", metric_monotonicity);
  run_criterion(4, "negative-frame AP direction", negative_frame_direction);
  run_criterion(5, "sampler truth table and 1:64", sampler_truth_table);

  std::optional<SynthRun> base;
  run_criterion(6, "end-to-end synthetic retrieval", [&] {
    const auto t0 = Clock::now();
    base = synth_and_infer(root / "plain", {}, 1);
    const double secs = seconds_since(t0);
    Outcome o;
    o.require(base->report.num_queries == 50, "expected 50 queries");
    o.require(base->report.st_ap_25 >= 0.9, "stAP25 below 0.9");
    o.require(base->report.success_rate >= 95.0, "success below 95%");
    o.require(base->report.recovery >= 85.0, "recovery below 85%");
    o.require(secs < 300.0, "runtime above 5 min");
    std::ostringstream d;
    d.precision(3);
    d << fmt_report(base->report) << ", 50x60 in " << secs << " s";
    o.detail = o.pass ? d.str() : o.detail + "; " + d.str();
    return o;
  });

  run_criterion(7, "scenario stress", [&] {
    Outcome o;
    if (!base) {
      o.require(false, "criterion 6 run unavailable");
      return o;
    }
    const auto distract = synth_and_infer(root / "distractor", {"--distractor-similar"}, 1);
    const auto blur = synth_and_infer(root / "blur", {"--blur-background"}, 1);
    const std::size_t false_peaks = false_peaks_on_distractor(distract);
    o.require(distract.report.st_ap_25 <= base->report.st_ap_25, "distractor_similar raised stAP25");
    o.require(blur.report.st_ap_25 <= base->report.st_ap_25, "blur_background raised stAP25");
    o.require(false_peaks >= 1, "no false peak on a distractor");
    std::ostringstream d;
    d.precision(4);
    d << "stAP25 plain " << base->report.st_ap_25 << ", distractor " << distract.report.st_ap_25 << ", blur "
      << blur.report.st_ap_25 << "; " << false_peaks << " false peak(s) on distractors";
    o.detail = o.pass ? d.str() : o.detail + "; " + d.str();
    return o;
  });

  run_criterion(8, "harness determinism and speedup", [&] {
    Outcome o;
    if (!base) {
      o.require(false, "criterion 6 run unavailable");
      return o;
    }
    const auto w4 = synth_and_infer(root / "plain", {}, 4, false);
    const auto w16 = synth_and_infer(root / "plain", {}, 16, false);
    o.require(w4.predictions_text == base->predictions_text && w16.predictions_text == base->predictions_text,
              "per-query files differ across worker counts");
    o.require(w4.report_text == base->report_text && w16.report_text == base->report_text,
              "reports differ across worker counts");
    const double ratio = w4.infer_seconds / base->infer_seconds;
    o.require(ratio <= 0.6, "workers=4 wall-clock above 0.6x workers=1");
    std::ostringstream d;
    d.precision(3);
    d << "outputs identical for workers 1/4/16: "
      << (w4.predictions_text == base->predictions_text && w16.predictions_text == base->predictions_text &&
                  w4.report_text == base->report_text && w16.report_text == base->report_text
              ? "yes"
              : "no")
      << "; wall-clock workers=1 " << base->infer_seconds << " s, workers=4 " << w4.infer_seconds << " s, ratio "
      << ratio << " on " << cores << " hardware thread(s)";
    o.detail = o.pass ? d.str() : o.detail + "; " + d.str();
    return o;
  });

  run_criterion(9, "file round trips", [&] {
    Outcome o;
    testing::Gen gen(4242);
    const fs::path dir = root / "roundtrip";
    fs::create_directories(dir);
    int checked = 0;
    for (int i = 0; i < 100 && o.pass; ++i) {
      const auto ann = gen.annotations();
      io::save_annotation_file(dir / "a.jsonl", ann);
      o.require(io::load_annotation_file(dir / "a.jsonl") == ann, "annotation file changed");
      io::save_annotation_file(dir / "a2.jsonl", io::load_annotation_file(dir / "a.jsonl"));
      o.require(io::read_text(dir / "a.jsonl") == io::read_text(dir / "a2.jsonl"), "annotation bytes changed");

      const auto det = gen.detections();
      io::save_detections(dir / "d.jsonl", det);
      o.require(io::load_detections(dir / "d.jsonl") == det, "detections file changed");
      io::save_detections(dir / "d2.jsonl", io::load_detections(dir / "d.jsonl"));
      o.require(io::read_text(dir / "d.jsonl") == io::read_text(dir / "d2.jsonl"), "detections bytes changed");

      const auto pred = gen.predictions();
      io::save_predictions(dir / "p.jsonl", pred);
      o.require(io::load_predictions(dir / "p.jsonl") == pred, "predictions file changed");
      io::save_predictions(dir / "p2.jsonl", io::load_predictions(dir / "p.jsonl"));
      o.require(io::read_text(dir / "p.jsonl") == io::read_text(dir / "p2.jsonl"), "predictions bytes changed");

      const auto bat = gen.batches();
      io::save_batches(dir / "b.jsonl", bat);
      o.require(io::load_batches(dir / "b.jsonl") == bat, "batch manifest changed");
      io::save_batches(dir / "b2.jsonl", io::load_batches(dir / "b.jsonl"));
      o.require(io::read_text(dir / "b.jsonl") == io::read_text(dir / "b2.jsonl"), "batch manifest bytes changed");
      checked += 4;
    }
    if (o.pass) o.detail = std::to_string(checked) + " files (100 per format) round-tripped";
    return o;
  });

  fs::remove_all(root);
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
