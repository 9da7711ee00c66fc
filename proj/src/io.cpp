#include "vq2d/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

namespace vq2d::io {

using Json = nlohmann::ordered_json;

namespace {

// Location of the record being parsed, for diagnostics.
class RecordContext {
 public:
  RecordContext(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  void set_query(std::string id) { query_ = std::move(id); }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    std::string msg = source_ + ":" + std::to_string(line_) + ": ";
    if (!query_.empty()) msg += "query '" + query_ + "': ";
    if (!field.empty()) msg += "field '" + field + "': ";
    throw InvalidArgument(msg + what);
  }

 private:
  const std::string& source_;
  std::size_t line_;
  std::string query_;
};

const Json& need(const Json& j, const std::string& key, const RecordContext& ctx,
                 const std::string& prefix = "") {
  if (!j.is_object()) ctx.fail(prefix, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) ctx.fail(prefix + key, "missing");
  return *it;
}

double need_number(const Json& j, const std::string& key, const RecordContext& ctx,
                   const std::string& prefix = "") {
  const Json& v = need(j, key, ctx, prefix);
  if (!v.is_number()) ctx.fail(prefix + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) ctx.fail(prefix + key, "not finite");
  return d;
}

std::int64_t need_int(const Json& j, const std::string& key, const RecordContext& ctx,
                      const std::string& prefix = "") {
  const Json& v = need(j, key, ctx, prefix);
  if (!v.is_number_integer()) ctx.fail(prefix + key, "expected an integer");
  return v.get<std::int64_t>();
}

FrameIndex need_frame(const Json& j, const std::string& key, const RecordContext& ctx,
                      const std::string& prefix = "") {
  const std::int64_t v = need_int(j, key, ctx, prefix);
  if (v < 0) ctx.fail(prefix + key, "frame index must be non-negative");
  return FrameIndex(v);
}

std::string need_string(const Json& j, const std::string& key, const RecordContext& ctx,
                        const std::string& prefix = "") {
  const Json& v = need(j, key, ctx, prefix);
  if (!v.is_string()) ctx.fail(prefix + key, "expected a string");
  return v.get<std::string>();
}

bool need_bool(const Json& j, const std::string& key, const RecordContext& ctx,
               const std::string& prefix = "") {
  const Json& v = need(j, key, ctx, prefix);
  if (!v.is_boolean()) ctx.fail(prefix + key, "expected a boolean");
  return v.get<bool>();
}

const Json& need_array(const Json& j, const std::string& key, const RecordContext& ctx,
                       const std::string& prefix = "") {
  const Json& v = need(j, key, ctx, prefix);
  if (!v.is_array()) ctx.fail(prefix + key, "expected an array");
  return v;
}

Json box_json(const Box& b) { return Json{{"x", b.x()}, {"y", b.y()}, {"w", b.w()}, {"h", b.h()}}; }

Box parse_box(const Json& j, const RecordContext& ctx, const std::string& field) {
  if (!j.is_object()) ctx.fail(field, "expected a box object");
  const std::string p = field + ".";
  const double x = need_number(j, "x", ctx, p);
  const double y = need_number(j, "y", ctx, p);
  const double w = need_number(j, "w", ctx, p);
  const double h = need_number(j, "h", ctx, p);
  try {
    return Box(x, y, w, h);
  } catch (const InvalidArgument& e) {
    ctx.fail(field, e.what());
  }
}

Json track_json(const ResponseTrack& t) {
  Json boxes = Json::array();
  for (const auto& b : t.boxes()) boxes.push_back(box_json(b));
  return Json{{"start", t.start().value()}, {"boxes", std::move(boxes)}};
}

ResponseTrack parse_track(const Json& j, const std::string& video_id, const RecordContext& ctx,
                          const std::string& field) {
  const std::string p = field + ".";
  const FrameIndex start = need_frame(j, "start", ctx, p);
  const Json& arr = need_array(j, "boxes", ctx, p);
  if (arr.empty()) ctx.fail(p + "boxes", "track needs at least one box");
  std::vector<Box> boxes;
  boxes.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].is_null()) ctx.fail(p + "boxes[" + std::to_string(i) + "]", "gap breaks contiguity");
    boxes.push_back(parse_box(arr[i], ctx, p + "boxes[" + std::to_string(i) + "]"));
  }
  return ResponseTrack(video_id, start, std::move(boxes));
}

Json header(std::string_view kind) {
  return Json{{"schema_version", kSchemaVersion}, {"kind", std::string(kind)}};
}

std::string join_lines(const Json& head, const std::vector<Json>& records) {
  std::string out = head.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

// Calls fn(record, ctx) for each record line after checking the header.
template <typename Fn>
void for_each_record(std::string_view text, std::string_view kind, const std::string& source, Fn&& fn) {
  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    RecordContext ctx(source, line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IoError(source + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!seen_header) {
      if (!j.is_object() || !j.contains("schema_version")) {
        throw UnsupportedSchema(source + ": missing schema_version header");
      }
      const Json& v = j["schema_version"];
      if (!v.is_number_integer() || v.get<std::int64_t>() != kSchemaVersion) {
        throw UnsupportedSchema(source + ": unsupported schema_version " + v.dump());
      }
      if (need_string(j, "kind", ctx) != kind) {
        throw UnsupportedSchema(source + ": expected a '" + std::string(kind) + "' file, got '" +
                                j["kind"].get<std::string>() + "'");
      }
      seen_header = true;
      continue;
    }
    fn(j, ctx);
  }
  if (!seen_header) throw UnsupportedSchema(source + ": empty file, no schema_version header");
}

Json proposal_json(const Proposal& p) {
  Json j{{"proposal_id", p.proposal_id},
         {"video_id", p.video_id},
         {"frame", p.frame.value()},
         {"box", box_json(p.box)}};
  if (p.loss) j["loss"] = *p.loss;
  return j;
}

Proposal parse_proposal(const Json& j, const RecordContext& ctx, const std::string& prefix) {
  Proposal p{need_string(j, "proposal_id", ctx, prefix), need_string(j, "video_id", ctx, prefix),
             need_frame(j, "frame", ctx, prefix), parse_box(need(j, "box", ctx, prefix), ctx, prefix + "box"),
             std::nullopt};
  if (j.contains("loss")) p.loss = need_number(j, "loss", ctx, prefix);
  return p;
}

const char* status_name(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::kAnswered: return "answered";
    case OutcomeStatus::kNoResponse: return "no_response";
    case OutcomeStatus::kError: return "error";
  }
  return "error";
}

}  // namespace

// Annotations

std::string dump_annotations(const AnnotationFile& file) {
  std::vector<Json> records;
  records.reserve(file.records.size());
  for (const auto& r : file.records) {
    const auto& q = r.query;
    records.push_back(Json{
        {"query_id", q.query_id},
        {"video_id", q.video_id},
        {"query_frame", q.query_frame.value()},
        {"crop", Json{{"video_id", q.crop_video_id}, {"frame", q.crop_frame.value()}, {"box", box_json(q.crop_box)}}},
        {"gt_track", track_json(r.gt_track)}});
  }
  return join_lines(header(kAnnotationsKind), records);
}

AnnotationFile parse_annotations(std::string_view text, const std::string& source) {
  AnnotationFile file;
  std::set<std::string> ids;
  for_each_record(text, kAnnotationsKind, source, [&](const Json& j, RecordContext& ctx) {
    const std::string id = need_string(j, "query_id", ctx);
    ctx.set_query(id);
    if (!ids.insert(id).second) ctx.fail("query_id", "duplicate query_id");
    const std::string video = need_string(j, "video_id", ctx);
    const FrameIndex q = need_frame(j, "query_frame", ctx);
    if (q.value() < 1) ctx.fail("query_frame", "must be >= 1");
    const Json& crop = need(j, "crop", ctx);
    VisualQuery query{id,
                      video,
                      q,
                      need_string(crop, "video_id", ctx, "crop."),
                      need_frame(crop, "frame", ctx, "crop."),
                      parse_box(need(crop, "box", ctx, "crop."), ctx, "crop.box")};
    ResponseTrack gt = parse_track(need(j, "gt_track", ctx), video, ctx, "gt_track");
    if (gt.end() >= q) {
      ctx.fail("gt_track", "ends at frame " + std::to_string(gt.end().value()) +
                               ", not before query_frame " + std::to_string(q.value()));
    }
    file.records.push_back({std::move(query), std::move(gt)});
  });
  return file;
}

Workload to_workload(const AnnotationFile& file) {
  Workload w;
  std::map<std::string, std::vector<VisualQuery>> by_video;
  for (const auto& r : file.records) {
    by_video[r.query.video_id].push_back(r.query);
    if (!w.ground_truth.emplace(r.query.query_id, r.gt_track).second) {
      throw InvalidArgument("duplicate query_id '" + r.query.query_id + "'");
    }
  }
  for (auto& [video, queries] : by_video) w.groups.push_back({video, std::move(queries)});
  return w;
}

// Detections

std::string dump_detections(const DetectionTable& table) {
  std::vector<Json> records;
  for (const auto& [video, frames] : table) {
    for (const auto& [frame, dets] : frames) {
      Json arr = Json::array();
      for (const auto& d : dets) arr.push_back(Json{{"box", box_json(d.box)}, {"score", d.score}});
      records.push_back(Json{{"video_id", video}, {"frame", frame}, {"detections", std::move(arr)}});
    }
  }
  return join_lines(header(kDetectionsKind), records);
}

DetectionTable parse_detections(std::string_view text, const std::string& source) {
  DetectionTable table;
  for_each_record(text, kDetectionsKind, source, [&](const Json& j, RecordContext& ctx) {
    const std::string video = need_string(j, "video_id", ctx);
    const FrameIndex frame = need_frame(j, "frame", ctx);
    auto& frames = table[video];
    if (!frames.empty() && frames.rbegin()->first >= frame.value()) {
      ctx.fail("frame", "frames of video '" + video + "' must be strictly increasing");
    }
    const Json& arr = need_array(j, "detections", ctx);
    std::vector<ScoredBox> dets;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "detections[" + std::to_string(i) + "]";
      dets.push_back({parse_box(need(arr[i], "box", ctx, p + "."), ctx, p + ".box"),
                      need_number(arr[i], "score", ctx, p + ".")});
    }
    frames.emplace(frame.value(), std::move(dets));
  });
  return table;
}

// Predictions

std::string dump_predictions(const std::vector<QueryOutcome>& outcomes) {
  std::vector<Json> records;
  records.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    Json j{{"query_id", o.query_id}, {"video_id", o.video_id}, {"status", status_name(o.status)}};
    if (o.peak) {
      j["peak"] = Json{{"frame", o.peak->frame.value()}, {"box", box_json(o.peak->box)}, {"score", o.peak->score}};
    }
    if (o.prediction) {
      j["confidence"] = o.prediction->confidence();
      j["track"] = track_json(o.prediction->track());
    }
    if (o.status == OutcomeStatus::kError) j["error"] = o.error;
    records.push_back(std::move(j));
  }
  return join_lines(header(kPredictionsKind), records);
}

std::vector<QueryOutcome> parse_predictions(std::string_view text, const std::string& source) {
  std::vector<QueryOutcome> out;
  std::set<std::string> ids;
  for_each_record(text, kPredictionsKind, source, [&](const Json& j, RecordContext& ctx) {
    QueryOutcome o;
    o.query_id = need_string(j, "query_id", ctx);
    ctx.set_query(o.query_id);
    if (!ids.insert(o.query_id).second) ctx.fail("query_id", "duplicate query_id");
    o.video_id = need_string(j, "video_id", ctx);
    const std::string status = need_string(j, "status", ctx);
    if (status == "answered") {
      o.status = OutcomeStatus::kAnswered;
    } else if (status == "no_response") {
      o.status = OutcomeStatus::kNoResponse;
    } else if (status == "error") {
      o.status = OutcomeStatus::kError;
      o.error = need_string(j, "error", ctx);
    } else {
      ctx.fail("status", "unknown status '" + status + "'");
    }
    if (j.contains("peak")) {
      const Json& p = j["peak"];
      o.peak = Peak{need_frame(p, "frame", ctx, "peak."), parse_box(need(p, "box", ctx, "peak."), ctx, "peak.box"),
                    need_number(p, "score", ctx, "peak.")};
    }
    if (j.contains("track")) {
      o.prediction.emplace(parse_track(j["track"], o.video_id, ctx, "track"),
                           need_number(j, "confidence", ctx));
    }
    if ((o.status == OutcomeStatus::kAnswered) != o.prediction.has_value()) {
      ctx.fail("track", "must be present exactly when status is 'answered'");
    }
    out.push_back(std::move(o));
  });
  return out;
}

// Proposals and batches

std::string dump_proposals(const std::vector<ProposalRecord>& proposals) {
  std::vector<Json> records;
  for (const auto& r : proposals) {
    Json j{{"query_id", r.query_id}};
    j.update(proposal_json(r.proposal));
    records.push_back(std::move(j));
  }
  return join_lines(header(kProposalsKind), records);
}

std::vector<ProposalRecord> parse_proposals(std::string_view text, const std::string& source) {
  std::vector<ProposalRecord> out;
  for_each_record(text, kProposalsKind, source, [&](const Json& j, RecordContext& ctx) {
    const std::string id = need_string(j, "query_id", ctx);
    ctx.set_query(id);
    out.push_back({id, parse_proposal(j, ctx, "")});
  });
  return out;
}

std::string dump_batches(const std::vector<BatchRecord>& batches) {
  std::vector<Json> records;
  for (const auto& r : batches) {
    auto list = [](const std::vector<Proposal>& props, const char* label) {
      Json arr = Json::array();
      for (const auto& p : props) {
        Json j = proposal_json(p);
        j["label"] = label;
        arr.push_back(std::move(j));
      }
      return arr;
    };
    records.push_back(Json{{"query_id", r.query_id},
                           {"under_filled", r.batch.under_filled},
                           {"num_mined", r.batch.num_mined},
                           {"positives", list(r.batch.positives, "positive")},
                           {"negatives", list(r.batch.negatives, "negative")}});
  }
  return join_lines(header(kBatchesKind), records);
}

std::vector<BatchRecord> parse_batches(std::string_view text, const std::string& source) {
  std::vector<BatchRecord> out;
  for_each_record(text, kBatchesKind, source, [&](const Json& j, RecordContext& ctx) {
    BatchRecord r;
    r.query_id = need_string(j, "query_id", ctx);
    ctx.set_query(r.query_id);
    r.batch.under_filled = need_bool(j, "under_filled", ctx);
    const std::int64_t mined = need_int(j, "num_mined", ctx);
    if (mined < 0) ctx.fail("num_mined", "must be non-negative");
    r.batch.num_mined = static_cast<std::size_t>(mined);
    auto read_list = [&](const char* key, const char* label, std::vector<Proposal>& dst) {
      const Json& arr = need_array(j, key, ctx);
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = std::string(key) + "[" + std::to_string(i) + "].";
        if (need_string(arr[i], "label", ctx, p) != label) ctx.fail(p + "label", std::string("expected '") + label + "'");
        dst.push_back(parse_proposal(arr[i], ctx, p));
      }
    };
    read_list("positives", "positive", r.batch.positives);
    read_list("negatives", "negative", r.batch.negatives);
    if (r.batch.num_mined > r.batch.negatives.size()) ctx.fail("num_mined", "exceeds the negative count");
    out.push_back(std::move(r));
  });
  return out;
}

// Report

std::string report_json(const EvalReport& report, const MetricConfig& cfg) {
  Json j = header(kReportKind);
  j["num_queries"] = report.num_queries;
  j["st_ap_25"] = report.st_ap_25;
  j["t_ap_25"] = report.t_ap_25;
  j["success_rate"] = report.success_rate;
  j["recovery"] = report.recovery;
  j["st_threshold"] = cfg.st_threshold;
  j["t_threshold"] = cfg.t_threshold;
  j["success_threshold"] = cfg.success_threshold;
  j["recovery_box_threshold"] = cfg.recovery_box_threshold;
  return j.dump() + "\n";
}

std::string report_text(const EvalReport& report, const MetricConfig& cfg) {
  std::ostringstream os;
  os.precision(6);
  os << "num_queries " << report.num_queries << "\n"
     << "st_ap_25 " << report.st_ap_25 << "\n"
     << "t_ap_25 " << report.t_ap_25 << "\n"
     << "success_rate " << report.success_rate << "\n"
     << "recovery " << report.recovery << "\n"
     << "st_threshold " << cfg.st_threshold << "\n"
     << "success_threshold " << cfg.success_threshold << "\n";
  return os.str();
}

// Files

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

AnnotationFile load_annotation_file(const std::filesystem::path& path) {
  return parse_annotations(read_text(path), path.string());
}

void save_annotation_file(const std::filesystem::path& path, const AnnotationFile& file) {
  write_text(path, dump_annotations(file));
}

Workload load_annotations(const std::filesystem::path& path) {
  return to_workload(load_annotation_file(path));
}

DetectionTable load_detections(const std::filesystem::path& path) {
  return parse_detections(read_text(path), path.string());
}

void save_detections(const std::filesystem::path& path, const DetectionTable& table) {
  write_text(path, dump_detections(table));
}

std::vector<QueryOutcome> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text(path), path.string());
}

void save_predictions(const std::filesystem::path& path, const std::vector<QueryOutcome>& outcomes) {
  write_text(path, dump_predictions(outcomes));
}

std::vector<ProposalRecord> load_proposals(const std::filesystem::path& path) {
  return parse_proposals(read_text(path), path.string());
}

void save_proposals(const std::filesystem::path& path, const std::vector<ProposalRecord>& proposals) {
  write_text(path, dump_proposals(proposals));
}

std::vector<BatchRecord> load_batches(const std::filesystem::path& path) {
  return parse_batches(read_text(path), path.string());
}

void save_batches(const std::filesystem::path& path, const std::vector<BatchRecord>& batches) {
  write_text(path, dump_batches(batches));
}

// Frames

std::filesystem::path frame_path(const std::filesystem::path& root, const std::string& video_id,
                                 FrameIndex f) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(f.value()));
  return root / video_id / name;
}

void write_frame(const std::filesystem::path& path, const cv::Mat& image) {
  std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), image, {cv::IMWRITE_PNG_COMPRESSION, 3})) {
    throw IoError("cannot write frame '" + path.string() + "'");
  }
}

DirectoryFrameSource::DirectoryFrameSource(std::filesystem::path root, std::string video_id)
    : root_(std::move(root)), video_id_(std::move(video_id)) {
  if (!std::filesystem::is_directory(root_ / video_id_)) {
    throw IoError("no frame directory for video '" + video_id_ + "' under '" + root_.string() + "'");
  }
  while (std::filesystem::exists(frame_path(root_, video_id_, FrameIndex(num_frames_)))) ++num_frames_;
  if (num_frames_ == 0) throw IoError("video '" + video_id_ + "' has no frames");
}

cv::Mat DirectoryFrameSource::frame(FrameIndex f) const {
  if (f.value() >= num_frames_) throw FrameFetchError(video_id_, f, "index out of range");
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(f.value());
    if (it != cache_.end()) return it->second;
  }
  const auto path = frame_path(root_, video_id_, f);
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw FrameFetchError(video_id_, f, "cannot decode '" + path.string() + "'");
  if (img.depth() != CV_8U) throw FrameFetchError(video_id_, f, "frame is not 8-bit");
  std::lock_guard lock(mutex_);
  return cache_.emplace(f.value(), img).first->second;
}

DirectoryFrameStore::DirectoryFrameStore(std::filesystem::path root) : root_(std::move(root)) {}

std::shared_ptr<const FrameSource> DirectoryFrameStore::open(const std::string& video_id) const {
  return std::make_shared<DirectoryFrameSource>(root_, video_id);
}

}  // namespace vq2d::io
