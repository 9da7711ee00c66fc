#pragma once

// Detect-then-track retrieval: score every frame before the query against the
// visual crop, take the most confident frame as the peak, and grow a response
// track from it forward and backward with a template tracker.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "vq2d/core.hpp"
#include "vq2d/image.hpp"

namespace vq2d {

// Raised when a frame cannot be produced by a FrameSource.
class FrameFetchError : public Error {
 public:
  FrameFetchError(const std::string& video_id, FrameIndex frame, const std::string& why);

  FrameIndex frame() const { return frame_; }

 private:
  FrameIndex frame_;
};

// Raised by detect_peak when no frame carries a proposal.
class NoProposal : public Error {
 public:
  using Error::Error;
};

// Random access to the frames of one video. Implementations must allow
// concurrent calls to frame().
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual const std::string& video_id() const = 0;
  virtual std::int64_t num_frames() const = 0;
  // 8-bit BGR or gray image. Throws FrameFetchError.
  virtual cv::Mat frame(FrameIndex f) const = 0;
};

// Resolves video ids to frame sources. Must be safe to call concurrently.
class FrameStore {
 public:
  virtual ~FrameStore() = default;

  virtual std::shared_ptr<const FrameSource> open(const std::string& video_id) const = 0;
};

class InMemoryFrameSource : public FrameSource {
 public:
  InMemoryFrameSource(std::string video_id, std::vector<cv::Mat> frames);

  const std::string& video_id() const override { return video_id_; }
  std::int64_t num_frames() const override { return static_cast<std::int64_t>(frames_.size()); }
  cv::Mat frame(FrameIndex f) const override;

 private:
  std::string video_id_;
  std::vector<cv::Mat> frames_;
};

class InMemoryFrameStore : public FrameStore {
 public:
  void add(std::shared_ptr<const FrameSource> source);
  std::shared_ptr<const FrameSource> open(const std::string& video_id) const override;

 private:
  std::map<std::string, std::shared_ptr<const FrameSource>> sources_;
};

// Per-frame top-1 scorer. Implementations must be deterministic and safe to
// call from several threads at once.
class FrameScorer {
 public:
  virtual ~FrameScorer() = default;

  // Best candidate for `crop` on frame f; nullopt when the scorer has no
  // proposal at all for that frame.
  virtual std::optional<ScoredBox> best_match(const FrameSource& source, FrameIndex f,
                                              const cv::Mat& crop) const = 0;
};

class NccScorer : public FrameScorer {
 public:
  explicit NccScorer(NccOptions opts = {});

  std::optional<ScoredBox> best_match(const FrameSource& source, FrameIndex f,
                                      const cv::Mat& crop) const override;

 private:
  NccOptions opts_;
};

// Precomputed detections: video id -> frame -> candidate boxes.
using DetectionTable = std::map<std::string, std::map<std::int64_t, std::vector<ScoredBox>>>;

// Replays a DetectionTable. The top-1 of a frame is its highest-scoring
// detection (first one on ties); frames without detections yield nullopt.
class DetectionsScorer : public FrameScorer {
 public:
  explicit DetectionsScorer(std::shared_ptr<const DetectionTable> table);

  std::optional<ScoredBox> best_match(const FrameSource& source, FrameIndex f,
                                      const cv::Mat& crop) const override;

 private:
  std::shared_ptr<const DetectionTable> table_;
};

struct CurvePoint {
  double score;
  std::optional<Box> box;
};

// Score for frames where the scorer produced no proposal.
inline constexpr double kNoProposalScore = -1e300;

class SimilarityCurve {
 public:
  // Throws InvalidArgument on an empty curve or a non-finite score.
  SimilarityCurve(FrameIndex first_frame, std::vector<CurvePoint> points);

  FrameIndex first_frame() const { return first_frame_; }
  FrameIndex last_frame() const { return first_frame_ + static_cast<std::int64_t>(points_.size()) - 1; }
  const std::vector<CurvePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  FrameIndex first_frame_;
  std::vector<CurvePoint> points_;
};

struct Peak {
  FrameIndex frame;
  Box box;
  double score;

  friend bool operator==(const Peak&, const Peak&) = default;
};

enum class TemplateUpdate { kNone, kEveryFrame };

struct TrackerConfig {
  double stop_threshold = 0.6;
  // Pixels added around the previous box; nullopt means half the peak box
  // diagonal.
  std::optional<double> search_margin;
  TemplateUpdate template_update = TemplateUpdate::kNone;

  void validate() const;
};

struct PipelineConfig {
  TrackerConfig tracker;
  // Peaks scoring below this produce a "no response" outcome.
  double peak_threshold = 0.6;
};

// One curve point per frame of `range`, in frame order. Throws
// FrameFetchError when a frame cannot be read and InvalidArgument when the
// range leaves the video.
SimilarityCurve score_frames(const FrameSource& source, const cv::Mat& crop,
                             const FrameInterval& range, const FrameScorer& scorer);

// Frame of maximum score among points with a box; ties go to the latest
// frame. Throws NoProposal when no point has a box.
Peak detect_peak(const SimilarityCurve& curve);

// Grows a track from the peak by matching `peak_template` inside a window
// around the previous box, first forward (up to `last_frame`), then backward
// (down to frame 0). A direction stops at the first frame whose best match
// scores below cfg.stop_threshold.
ResponseTrack track_bidirectional(const FrameSource& source, const Peak& peak,
                                  const cv::Mat& peak_template, FrameIndex last_frame,
                                  const TrackerConfig& cfg);

struct Retrieval {
  std::optional<Peak> peak;          // absent when no frame had a proposal
  std::optional<ScoredTrack> track;  // absent for a "no response" outcome

  bool answered() const { return track.has_value(); }
};

// Image patch covered by `box` on the given frame.
cv::Mat crop_image(const cv::Mat& frame, const Box& box);

// score_frames over [0, q - 1], detect_peak, then track_bidirectional; the
// track confidence is the peak score. A video without any proposal, or a
// peak below cfg.peak_threshold, yields a Retrieval without a track.
Retrieval run_query(const FrameStore& store, const VisualQuery& query, const FrameScorer& scorer,
                    const PipelineConfig& cfg);

}  // namespace vq2d
