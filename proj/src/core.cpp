#include "vq2d/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace vq2d {

Box::Box(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw InvalidArgument("box fields must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw InvalidArgument("box width and height must be positive, got w=" + std::to_string(w) +
                          " h=" + std::to_string(h));
  }
}

double Box::diagonal() const { return std::hypot(w_, h_); }

FrameIndex::FrameIndex(std::int64_t value) : value_(value) {
  if (value < 0) {
    throw InvalidArgument("frame index must be non-negative, got " + std::to_string(value));
  }
}

FrameInterval::FrameInterval(FrameIndex s, FrameIndex e) : start(s), end(e) {
  if (s > e) {
    throw InvalidArgument("frame interval start " + std::to_string(s.value()) + " after end " +
                          std::to_string(e.value()));
  }
}

void VisualQuery::validate() const {
  if (query_frame.value() < 1) {
    throw InvalidArgument("query " + query_id + ": query_frame must be >= 1");
  }
}

ResponseTrack::ResponseTrack(std::string video_id, FrameIndex start, std::vector<Box> boxes)
    : video_id_(std::move(video_id)), start_(start), boxes_(std::move(boxes)) {
  if (boxes_.empty()) {
    throw InvalidArgument("response track on video '" + video_id_ + "' has no boxes");
  }
}

std::optional<Box> ResponseTrack::box_at(FrameIndex f) const {
  if (!covers(f)) return std::nullopt;
  return boxes_[static_cast<std::size_t>(f - start_)];
}

ScoredTrack::ScoredTrack(ResponseTrack track, double confidence)
    : track_(std::move(track)), confidence_(confidence) {
  if (!std::isfinite(confidence)) {
    throw InvalidArgument("track confidence must be finite");
  }
}

namespace {

// Areas are derived from the edges so that a box compared with itself gives
// intersection == area bit for bit.
double edge_area(const Box& b) { return (b.right() - b.x()) * (b.bottom() - b.y()); }

}  // namespace

double box_intersection(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double box_iou(const Box& a, const Box& b) {
  const double inter = box_intersection(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = edge_area(a) + edge_area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double temporal_iou(const FrameInterval& a, const FrameInterval& b) {
  const std::int64_t lo = std::max(a.start.value(), b.start.value());
  const std::int64_t hi = std::min(a.end.value(), b.end.value());
  if (hi < lo) return 0.0;
  const std::int64_t inter = hi - lo + 1;
  const std::int64_t uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double st_iou(const ResponseTrack& pred, const ResponseTrack& gt) {
  if (pred.video_id() != gt.video_id()) {
    throw InvalidArgument("st_iou across videos: '" + pred.video_id() + "' vs '" + gt.video_id() +
                          "'");
  }
  const std::int64_t first = std::min(pred.start().value(), gt.start().value());
  const std::int64_t last = std::max(pred.end().value(), gt.end().value());
  double inter = 0.0;
  double uni = 0.0;
  for (std::int64_t f = first; f <= last; ++f) {
    const auto p = pred.box_at(FrameIndex(f));
    const auto g = gt.box_at(FrameIndex(f));
    if (p && g) {
      const double i = box_intersection(*p, *g);
      inter += i;
      uni += edge_area(*p) + edge_area(*g) - i;
    } else if (p) {
      uni += edge_area(*p);
    } else if (g) {
      uni += edge_area(*g);
    }
  }
  if (inter == 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<Box> clamp_to_frame(const Box& b, double width, double height) {
  const double x0 = std::max(b.x(), 0.0);
  const double y0 = std::max(b.y(), 0.0);
  const double x1 = std::min(b.right(), width);
  const double y1 = std::min(b.bottom(), height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  if (x0 == b.x() && y0 == b.y() && x1 == b.right() && y1 == b.bottom()) return b;
  return Box(x0, y0, x1 - x0, y1 - y0);
}

}  // namespace vq2d
