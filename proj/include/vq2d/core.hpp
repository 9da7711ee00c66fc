#pragma once

// Domain types and spatio-temporal geometry shared by the whole toolkit.
//
// Frame intervals are inclusive at both ends: [s, e] holds e - s + 1 frames.
// Boxes live in continuous pixel coordinates with area = w * h.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vq2d/error.hpp"

namespace vq2d {

// Axis-aligned rectangle (x, y, w, h) in pixels.
class Box {
 public:
  // Throws InvalidArgument unless w > 0, h > 0 and all fields are finite.
  Box(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double area() const { return w_ * h_; }
  double diagonal() const;

  Box translated(double dx, double dy) const { return {x_ + dx, y_ + dy, w_, h_}; }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x_;
  double y_;
  double w_;
  double h_;
};

// Ordinal of a frame inside one video.
class FrameIndex {
 public:
  constexpr FrameIndex() = default;
  // Throws InvalidArgument for negative values.
  explicit FrameIndex(std::int64_t value);

  constexpr std::int64_t value() const { return value_; }

  FrameIndex operator+(std::int64_t offset) const { return FrameIndex(value_ + offset); }
  FrameIndex operator-(std::int64_t offset) const { return FrameIndex(value_ - offset); }
  std::int64_t operator-(FrameIndex other) const { return value_ - other.value_; }

  friend constexpr auto operator<=>(FrameIndex, FrameIndex) = default;

 private:
  std::int64_t value_ = 0;
};

// Inclusive frame range [start, end].
struct FrameInterval {
  FrameIndex start;
  FrameIndex end;

  // Throws InvalidArgument if start > end.
  FrameInterval(FrameIndex start, FrameIndex end);

  std::int64_t length() const { return end - start + 1; }
  bool contains(FrameIndex f) const { return start <= f && f <= end; }

  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

struct VisualQuery {
  std::string query_id;
  std::string video_id;
  FrameIndex query_frame;
  std::string crop_video_id;
  FrameIndex crop_frame;
  Box crop_box;

  // Throws InvalidArgument if query_frame < 1.
  void validate() const;

  friend bool operator==(const VisualQuery&, const VisualQuery&) = default;
};

// Temporally contiguous boxes, one per frame from start() to end().
class ResponseTrack {
 public:
  // Throws InvalidArgument if boxes is empty.
  ResponseTrack(std::string video_id, FrameIndex start, std::vector<Box> boxes);

  const std::string& video_id() const { return video_id_; }
  FrameIndex start() const { return start_; }
  FrameIndex end() const { return start_ + static_cast<std::int64_t>(boxes_.size()) - 1; }
  FrameInterval extent() const { return {start(), end()}; }
  std::size_t size() const { return boxes_.size(); }
  const std::vector<Box>& boxes() const { return boxes_; }

  bool covers(FrameIndex f) const { return extent().contains(f); }
  // Box on frame f; nullopt when f lies outside the track.
  std::optional<Box> box_at(FrameIndex f) const;

  friend bool operator==(const ResponseTrack&, const ResponseTrack&) = default;

 private:
  std::string video_id_;
  FrameIndex start_;
  std::vector<Box> boxes_;
};

class ScoredTrack {
 public:
  // Throws InvalidArgument for a non-finite confidence.
  ScoredTrack(ResponseTrack track, double confidence);

  const ResponseTrack& track() const { return track_; }
  double confidence() const { return confidence_; }

  friend bool operator==(const ScoredTrack&, const ScoredTrack&) = default;

 private:
  ResponseTrack track_;
  double confidence_;
};

// A candidate box and the confidence a detector or matcher gave it.
struct ScoredBox {
  Box box;
  double score;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

// Intersection over union of two boxes; 0 when disjoint.
double box_iou(const Box& a, const Box& b);

// Area of the overlap of two boxes; 0 when disjoint.
double box_intersection(const Box& a, const Box& b);

// |frames in both| / |frames in either| for inclusive intervals.
double temporal_iou(const FrameInterval& a, const FrameInterval& b);

// Volumetric tube IoU: summed per-frame intersection area over summed
// per-frame union area. A frame covered by one track only contributes that
// track's full box area to the union. Throws InvalidArgument when the two
// tracks belong to different videos.
double st_iou(const ResponseTrack& pred, const ResponseTrack& gt);

// Clips a box to the [0, width] x [0, height] frame. Returns nullopt when
// nothing of the box remains inside.
std::optional<Box> clamp_to_frame(const Box& b, double width, double height);

}  // namespace vq2d
