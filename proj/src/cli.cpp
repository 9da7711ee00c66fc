#include "vq2d/cli.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "vq2d/harness.hpp"
#include "vq2d/io.hpp"
#include "vq2d/sampler.hpp"
#include "vq2d/synth.hpp"

namespace vq2d::cli {
namespace {

struct ScorerOptions {
  std::string kind = "ncc";
  std::string detections;
  int stride = 4;
  std::vector<double> scales{0.75, 1.0, 1.33};
};

void add_scorer_flags(CLI::App* cmd, ScorerOptions& o) {
  cmd->add_option("--scorer", o.kind, "Frame scorer")
      ->check(CLI::IsMember({"ncc", "detections-file"}))
      ->capture_default_str();
  cmd->add_option("--detections", o.detections, "Detections file for --scorer detections-file");
  cmd->add_option("--stride", o.stride, "NCC coarse stride in pixels")->capture_default_str();
  cmd->add_option("--scales", o.scales, "NCC template scales")->capture_default_str();
}

std::unique_ptr<FrameScorer> make_scorer(const ScorerOptions& o) {
  if (o.kind == "detections-file") {
    if (o.detections.empty()) throw InvalidArgument("--scorer detections-file needs --detections");
    return std::make_unique<DetectionsScorer>(
        std::make_shared<const DetectionTable>(io::load_detections(o.detections)));
  }
  NccOptions ncc;
  ncc.stride = o.stride;
  ncc.scales = o.scales;
  return std::make_unique<NccScorer>(ncc);
}

// "a:b" with positive integers.
std::pair<std::int64_t, std::int64_t> parse_ratio(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("--ratio must look like 1:64, got '" + text + "'");
  try {
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    const std::string a_str = text.substr(0, colon);
    const std::string b_str = text.substr(colon + 1);
    const long long a = std::stoll(a_str, &used_a);
    const long long b = std::stoll(b_str, &used_b);
    if (used_a != a_str.size() || used_b != b_str.size() || a < 1 || b < 1) throw std::invalid_argument("");
    return {a, b};
  } catch (const std::logic_error&) {
    throw InvalidArgument("--ratio must look like 1:64, got '" + text + "'");
  }
}

int cmd_synth(const synth::SynthConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const auto ds = synth::synth_generate(cfg, out_dir);
  out << "wrote " << ds.videos.size() << " videos to " << out_dir << "\n";
  return 0;
}

struct InferOptions {
  std::string annotations;
  std::string frames;
  std::string out;
  std::string report;
  std::size_t workers = 1;
  std::size_t group_size = 1;
  std::uint64_t shuffle_seed = 0;
  double stop_thresh = 0.6;
  std::optional<double> search_margin;
  std::optional<double> peak_thresh;
  std::string template_update = "none";
  ScorerOptions scorer;
};

PipelineConfig pipeline_config(const InferOptions& o) {
  PipelineConfig p;
  p.tracker.stop_threshold = o.stop_thresh;
  p.tracker.search_margin = o.search_margin;
  p.tracker.template_update =
      o.template_update == "every-frame" ? TemplateUpdate::kEveryFrame : TemplateUpdate::kNone;
  // Detector scores live on their own scale; only NCC gets a default floor.
  p.peak_threshold = o.peak_thresh.value_or(o.scorer.kind == "ncc" ? 0.6 : std::numeric_limits<double>::lowest());
  return p;
}

int cmd_infer(const InferOptions& o, std::ostream& out) {
  const Workload workload = io::load_annotations(o.annotations);
  const io::DirectoryFrameStore store(o.frames);
  const auto scorer = make_scorer(o.scorer);
  HarnessConfig hc;
  hc.workers = o.workers;
  hc.videos_per_group = o.group_size;
  hc.shuffle_seed = o.shuffle_seed;
  const MetricConfig mc;
  const HarnessResult result = evaluate_parallel(workload, store, *scorer, pipeline_config(o), hc, mc);
  io::save_predictions(o.out, result.outcomes);
  if (!o.report.empty()) io::write_text(o.report, io::report_json(result.report, mc));
  out << "queries " << result.outcomes.size() << " answered " << result.answered << " no_response "
      << result.no_response << " errored " << result.errored << "\n";
  return 0;
}

struct EvaluateOptions {
  std::string predictions;
  std::string annotations;
  std::string format = "json";
  std::string out;
  MetricConfig metrics;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  const Workload workload = io::load_annotations(o.annotations);
  auto outcomes = io::load_predictions(o.predictions);
  std::set<std::string> seen;
  for (const auto& p : outcomes) {
    if (!workload.ground_truth.contains(p.query_id)) {
      throw InvalidArgument(o.predictions + ": query '" + p.query_id + "' is not in the annotations");
    }
    seen.insert(p.query_id);
  }
  for (const auto& [id, gt] : workload.ground_truth) {
    if (seen.contains(id)) continue;
    QueryOutcome missing;
    missing.query_id = id;
    missing.video_id = gt.video_id();
    outcomes.push_back(std::move(missing));
  }
  const auto results = to_query_results(outcomes, workload.ground_truth);
  const EvalReport report = evaluate(results, o.metrics);
  const std::string text =
      o.format == "text" ? io::report_text(report, o.metrics) : io::report_json(report, o.metrics);
  if (!o.out.empty()) io::write_text(o.out, text);
  out << text;
  return 0;
}

struct SampleOptions {
  std::string proposals;
  std::string annotations;
  std::string ratio = "1:64";
  std::int64_t mining_k = 32;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample(const SampleOptions& o, std::ostream& out) {
  const auto [pos, neg] = parse_ratio(o.ratio);
  BatchSpec spec{pos, neg, o.mining_k};
  spec.validate();
  const Workload workload = io::load_annotations(o.annotations);
  std::map<std::string, std::vector<Proposal>> by_query;
  for (auto& r : io::load_proposals(o.proposals)) {
    if (!workload.ground_truth.contains(r.query_id)) {
      throw InvalidArgument(o.proposals + ": query '" + r.query_id + "' is not in the annotations");
    }
    by_query[r.query_id].push_back(std::move(r.proposal));
  }
  std::vector<io::BatchRecord> batches;
  std::uint64_t index = 0;
  std::size_t under = 0;
  for (const auto& [query_id, props] : by_query) {
    const ResponseTrack& gt = workload.ground_truth.at(query_id);
    const GroundTruthContext ctx{gt.video_id(), gt};
    std::vector<Proposal> positives;
    std::vector<Proposal> negatives;
    for (const auto& p : props) {
      (classify_proposal(p, ctx) == ProposalLabel::kPositive ? positives : negatives).push_back(p);
    }
    if (positives.empty()) throw InvalidArgument("query '" + query_id + "' has no positive proposal");
    Batch batch = balance_batch(positives, negatives, spec, o.seed + index++);
    if (batch.under_filled) ++under;
    batches.push_back({query_id, std::move(batch)});
  }
  io::save_batches(o.out, batches);
  out << "batches " << batches.size() << " under_filled " << under << "\n";
  return 0;
}

struct CurveOptions {
  std::string annotations;
  std::string frames;
  std::string query_id;
  std::string out;
  ScorerOptions scorer;
};

int cmd_curve(const CurveOptions& o, std::ostream& out) {
  const auto file = io::load_annotation_file(o.annotations);
  const io::AnnotationRecord* rec = nullptr;
  for (const auto& r : file.records) {
    if (r.query.query_id == o.query_id) rec = &r;
  }
  if (!rec) throw InvalidArgument("query '" + o.query_id + "' is not in " + o.annotations);
  const io::DirectoryFrameStore store(o.frames);
  const auto scorer = make_scorer(o.scorer);
  const auto source = store.open(rec->query.video_id);
  const cv::Mat crop =
      crop_image(store.open(rec->query.crop_video_id)->frame(rec->query.crop_frame), rec->query.crop_box);
  const SimilarityCurve curve =
      score_frames(*source, crop, {FrameIndex(0), rec->query.query_frame - 1}, *scorer);

  std::ostringstream table;
  table.precision(9);
  table << "frame\tscore\tx\ty\tw\th\tin_gt\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const FrameIndex f = curve.first_frame() + static_cast<std::int64_t>(i);
    const auto& p = curve.points()[i];
    table << f.value() << '\t';
    if (p.box) {
      table << p.score << '\t' << p.box->x() << '\t' << p.box->y() << '\t' << p.box->w() << '\t' << p.box->h();
    } else {
      table << "\t\t\t\t";
    }
    table << '\t' << (rec->gt_track.covers(f) ? 1 : 0) << '\n';
  }
  if (o.out.empty()) {
    out << table.str();
  } else {
    io::write_text(o.out, table.str());
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visual-query localization toolkit", "vq2d"};
  app.require_subcommand(1);

  synth::SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--videos", synth_cfg.num_videos)->capture_default_str();
  synth->add_option("--frames", synth_cfg.frames_per_video, "Frames per video")->capture_default_str();
  synth->add_option("--width", synth_cfg.width)->capture_default_str();
  synth->add_option("--height", synth_cfg.height)->capture_default_str();
  synth->add_option("--seed", synth_cfg.rng_seed)->capture_default_str();
  synth->add_option("--texture-seed", synth_cfg.texture_seed)->capture_default_str();
  synth->add_option("--appearance-gap", synth_cfg.appearance_gap)->capture_default_str();
  synth->add_flag("--distractor-similar", synth_cfg.distractor_similar);
  synth->add_flag("--ambiguous-context", synth_cfg.ambiguous_context);
  synth->add_flag("--blur-background", synth_cfg.blur_background);

  InferOptions infer_opts;
  infer_opts.workers = default_worker_count();
  auto* infer = app.add_subcommand("infer", "Run the retrieval pipeline over an annotation file");
  infer->add_option("--annotations", infer_opts.annotations)->required()->check(CLI::ExistingFile);
  infer->add_option("--frames", infer_opts.frames, "Frame store root")->required()->check(CLI::ExistingDirectory);
  infer->add_option("--out", infer_opts.out, "Per-query predictions file")->required();
  infer->add_option("--report", infer_opts.report, "Also write the evaluation report here");
  infer->add_option("--workers", infer_opts.workers, "Concurrent workers (env VQ2D_WORKERS)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  infer->add_option("--group-size", infer_opts.group_size, "Videos per evaluation group")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  infer->add_option("--shuffle-seed", infer_opts.shuffle_seed)->capture_default_str();
  infer->add_option("--stop-thresh", infer_opts.stop_thresh, "Tracker stop threshold")->capture_default_str();
  infer->add_option("--search-margin", infer_opts.search_margin, "Tracker search margin in pixels");
  infer->add_option("--peak-thresh", infer_opts.peak_thresh, "Minimum peak score for a response");
  infer->add_option("--template-update", infer_opts.template_update)
      ->check(CLI::IsMember({"none", "every-frame"}))
      ->capture_default_str();
  add_scorer_flags(infer, infer_opts.scorer);

  EvaluateOptions eval_opts;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate_cmd->add_option("--predictions", eval_opts.predictions)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--annotations", eval_opts.annotations)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--st-thresh", eval_opts.metrics.st_threshold)->capture_default_str();
  evaluate_cmd->add_option("--t-thresh", eval_opts.metrics.t_threshold)->capture_default_str();
  evaluate_cmd->add_option("--succ-thresh", eval_opts.metrics.success_threshold)->capture_default_str();
  evaluate_cmd->add_option("--rec-thresh", eval_opts.metrics.recovery_box_threshold)->capture_default_str();
  evaluate_cmd->add_option("--report", eval_opts.format, "Report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--out", eval_opts.out, "Also write the report here");

  SampleOptions sample_opts;
  auto* sample = app.add_subcommand("sample", "Build balanced training batch manifests");
  sample->add_option("--proposals", sample_opts.proposals)->required()->check(CLI::ExistingFile);
  sample->add_option("--annotations", sample_opts.annotations)->required()->check(CLI::ExistingFile);
  sample->add_option("--ratio", sample_opts.ratio, "positive:negative ratio")->capture_default_str();
  sample->add_option("--mining-k", sample_opts.mining_k, "Hard negatives mined per batch")->capture_default_str();
  sample->add_option("--seed", sample_opts.seed)->capture_default_str();
  sample->add_option("--out", sample_opts.out, "Batch manifest file")->required();

  CurveOptions curve_opts;
  auto* curve = app.add_subcommand("curve", "Emit the similarity curve of one query as TSV");
  curve->add_option("--annotations", curve_opts.annotations)->required()->check(CLI::ExistingFile);
  curve->add_option("--frames", curve_opts.frames)->required()->check(CLI::ExistingDirectory);
  curve->add_option("--query-id", curve_opts.query_id)->required();
  curve->add_option("--out", curve_opts.out, "Output file (default: stdout)");
  add_scorer_flags(curve, curve_opts.scorer);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "vq2d: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out, out);
    if (infer->parsed()) return cmd_infer(infer_opts, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_opts, out);
    if (sample->parsed()) return cmd_sample(sample_opts, out);
    if (curve->parsed()) return cmd_curve(curve_opts, out);
  } catch (const std::exception& e) {
    err << "vq2d: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vq2d::cli
