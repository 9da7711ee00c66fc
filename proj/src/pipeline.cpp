#include "vq2d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace vq2d {

FrameFetchError::FrameFetchError(const std::string& video_id, FrameIndex frame,
                                 const std::string& why)
    : Error("cannot fetch frame " + std::to_string(frame.value()) + " of video '" + video_id +
            "': " + why),
      frame_(frame) {}

InMemoryFrameSource::InMemoryFrameSource(std::string video_id, std::vector<cv::Mat> frames)
    : video_id_(std::move(video_id)), frames_(std::move(frames)) {}

cv::Mat InMemoryFrameSource::frame(FrameIndex f) const {
  if (f.value() >= num_frames()) throw FrameFetchError(video_id_, f, "index out of range");
  return frames_[static_cast<std::size_t>(f.value())];
}

void InMemoryFrameStore::add(std::shared_ptr<const FrameSource> source) {
  const std::string id = source->video_id();
  sources_[id] = std::move(source);
}

std::shared_ptr<const FrameSource> InMemoryFrameStore::open(const std::string& video_id) const {
  const auto it = sources_.find(video_id);
  if (it == sources_.end()) throw Error("unknown video '" + video_id + "'");
  return it->second;
}

NccScorer::NccScorer(NccOptions opts) : opts_(std::move(opts)) {}

std::optional<ScoredBox> NccScorer::best_match(const FrameSource& source, FrameIndex f,
                                               const cv::Mat& crop) const {
  const CorrelationPlane plane(to_gray(source.frame(f)));
  return ncc_score(plane, to_gray(crop), opts_);
}

DetectionsScorer::DetectionsScorer(std::shared_ptr<const DetectionTable> table)
    : table_(std::move(table)) {
  if (!table_) throw InvalidArgument("detections scorer needs a table");
}

std::optional<ScoredBox> DetectionsScorer::best_match(const FrameSource& source, FrameIndex f,
                                                      const cv::Mat& /*crop*/) const {
  const auto video = table_->find(source.video_id());
  if (video == table_->end()) return std::nullopt;
  const auto frame = video->second.find(f.value());
  if (frame == video->second.end() || frame->second.empty()) return std::nullopt;
  const auto& dets = frame->second;
  const auto best = std::max_element(dets.begin(), dets.end(), [](const ScoredBox& a, const ScoredBox& b) {
    return a.score < b.score;
  });
  return *best;
}

SimilarityCurve::SimilarityCurve(FrameIndex first_frame, std::vector<CurvePoint> points)
    : first_frame_(first_frame), points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("similarity curve is empty");
  for (const auto& p : points_) {
    if (!std::isfinite(p.score)) throw InvalidArgument("similarity curve score is not finite");
  }
}

void TrackerConfig::validate() const {
  if (!std::isfinite(stop_threshold)) throw InvalidArgument("tracker stop_threshold must be finite");
  if (search_margin && !(*search_margin >= 0.0 && std::isfinite(*search_margin))) {
    throw InvalidArgument("tracker search_margin must be a finite value >= 0");
  }
}

SimilarityCurve score_frames(const FrameSource& source, const cv::Mat& crop,
                             const FrameInterval& range, const FrameScorer& scorer) {
  if (range.end.value() >= source.num_frames()) {
    throw InvalidArgument("frame range ends at " + std::to_string(range.end.value()) + " but video '" +
                          source.video_id() + "' has " + std::to_string(source.num_frames()) +
                          " frames");
  }
  std::vector<CurvePoint> points;
  points.reserve(static_cast<std::size_t>(range.length()));
  for (std::int64_t f = range.start.value(); f <= range.end.value(); ++f) {
    const auto top1 = scorer.best_match(source, FrameIndex(f), crop);
    if (top1) {
      if (!std::isfinite(top1->score)) {
        throw InvalidArgument("scorer returned a non-finite score on frame " + std::to_string(f));
      }
      points.push_back({top1->score, top1->box});
    } else {
      points.push_back({kNoProposalScore, std::nullopt});
    }
  }
  return SimilarityCurve(range.start, std::move(points));
}

Peak detect_peak(const SimilarityCurve& curve) {
  const auto& pts = curve.points();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].box) continue;
    // >= lets later frames win ties.
    if (!best || pts[i].score >= pts[*best].score) best = i;
  }
  if (!best) throw NoProposal("no frame of the similarity curve carries a proposal");
  return {curve.first_frame() + static_cast<std::int64_t>(*best), *pts[*best].box, pts[*best].score};
}

cv::Mat crop_image(const cv::Mat& frame, const Box& box) {
  return frame(pixel_rect(box, frame.size())).clone();
}

namespace {

cv::Rect search_window(const Box& prev, double margin) {
  const int x0 = static_cast<int>(std::floor(prev.x() - margin));
  const int y0 = static_cast<int>(std::floor(prev.y() - margin));
  const int x1 = static_cast<int>(std::ceil(prev.right() + margin));
  const int y1 = static_cast<int>(std::ceil(prev.bottom() + margin));
  return {x0, y0, x1 - x0, y1 - y0};
}

// Boxes for frames from+step, from+2*step, ... in visiting order.
std::vector<Box> follow(const FrameSource& source, FrameIndex from, int step, std::int64_t limit,
                        const Box& start_box, const cv::Mat& template_gray, double margin,
                        const TrackerConfig& cfg) {
  std::vector<Box> boxes;
  PreparedTemplate tmpl(template_gray);
  Box prev = start_box;
  for (std::int64_t f = from.value() + step; step > 0 ? f <= limit : f >= limit; f += step) {
    const cv::Mat gray = to_gray(source.frame(FrameIndex(f)));
    const CorrelationPlane plane(gray);
    const auto match = plane.search(tmpl, search_window(prev, margin));
    if (!match || match->score < cfg.stop_threshold) break;
    boxes.push_back(match->box);
    prev = match->box;
    if (cfg.template_update == TemplateUpdate::kEveryFrame) {
      tmpl = PreparedTemplate(gray(pixel_rect(prev, gray.size())).clone());
    }
  }
  return boxes;
}

}  // namespace

ResponseTrack track_bidirectional(const FrameSource& source, const Peak& peak,
                                  const cv::Mat& peak_template, FrameIndex last_frame,
                                  const TrackerConfig& cfg) {
  cfg.validate();
  const std::int64_t limit = std::min(last_frame.value(), source.num_frames() - 1);
  if (peak.frame.value() > limit) {
    throw InvalidArgument("peak frame " + std::to_string(peak.frame.value()) +
                          " lies beyond the tracking limit " + std::to_string(limit));
  }
  const cv::Mat peak_frame = source.frame(peak.frame);
  const auto start_box = clamp_to_frame(peak.box, peak_frame.cols, peak_frame.rows);
  if (!start_box) throw InvalidArgument("peak box lies outside the frame");
  const double margin = cfg.search_margin.value_or(start_box->diagonal() / 2.0);
  const cv::Mat template_gray = to_gray(peak_template);

  const auto forward = follow(source, peak.frame, +1, limit, *start_box, template_gray, margin, cfg);
  const auto backward = follow(source, peak.frame, -1, 0, *start_box, template_gray, margin, cfg);

  std::vector<Box> boxes;
  boxes.reserve(backward.size() + 1 + forward.size());
  boxes.insert(boxes.end(), backward.rbegin(), backward.rend());
  boxes.push_back(*start_box);
  boxes.insert(boxes.end(), forward.begin(), forward.end());
  const FrameIndex start = peak.frame - static_cast<std::int64_t>(backward.size());
  return ResponseTrack(source.video_id(), start, std::move(boxes));
}

Retrieval run_query(const FrameStore& store, const VisualQuery& query, const FrameScorer& scorer,
                    const PipelineConfig& cfg) {
  query.validate();
  const auto source = store.open(query.video_id);
  const FrameIndex last = query.query_frame - 1;
  if (last.value() >= source->num_frames()) {
    throw InvalidArgument("query " + query.query_id + ": query frame " +
                          std::to_string(query.query_frame.value()) + " exceeds video length " +
                          std::to_string(source->num_frames()));
  }
  const auto crop_source = store.open(query.crop_video_id);
  const cv::Mat crop = crop_image(crop_source->frame(query.crop_frame), query.crop_box);

  const SimilarityCurve curve = score_frames(*source, crop, {FrameIndex(0), last}, scorer);
  Retrieval out;
  try {
    out.peak = detect_peak(curve);
  } catch (const NoProposal&) {
    return out;
  }
  if (out.peak->score < cfg.peak_threshold) return out;

  const cv::Mat templ = crop_image(source->frame(out.peak->frame), out.peak->box);
  ResponseTrack track = track_bidirectional(*source, *out.peak, templ, last, cfg.tracker);
  out.track.emplace(std::move(track), out.peak->score);
  return out;
}

}  // namespace vq2d
