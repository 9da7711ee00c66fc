#pragma once

// Zero-normalized cross-correlation template matching on grayscale planes.

#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "vq2d/core.hpp"

namespace vq2d {

// Single-channel CV_32F copy of an 8-bit gray or BGR image.
cv::Mat to_gray(const cv::Mat& image);

// Pixel rectangle covering a box (edges rounded to the nearest pixel),
// clipped to the image. Throws InvalidArgument when nothing remains.
cv::Rect pixel_rect(const Box& box, const cv::Size& image_size);

Box to_box(const cv::Rect& r);

// Zero-mean template ready for repeated correlation.
class PreparedTemplate {
 public:
  explicit PreparedTemplate(const cv::Mat& gray);

  int width() const { return centered_.cols; }
  int height() const { return centered_.rows; }
  cv::Size size() const { return centered_.size(); }
  bool flat() const { return flat_; }

 private:
  friend class CorrelationPlane;
  cv::Mat centered_;  // CV_32F, mean removed
  double norm_ = 0.0;
  bool flat_ = false;
};

// A grayscale frame plus the integral images needed to normalize any window
// in O(1).
class CorrelationPlane {
 public:
  explicit CorrelationPlane(const cv::Mat& gray);

  int width() const { return gray_.cols; }
  int height() const { return gray_.rows; }

  // ZNCC of the template placed with its top-left corner at (x, y). Returns
  // 0 when either the window or the template has zero variance.
  double score(const PreparedTemplate& t, int x, int y) const;

  // Exhaustive search over every top-left position that keeps the template
  // inside `region`. Ties keep the first position in raster order. Returns
  // nullopt when the template does not fit.
  std::optional<ScoredBox> search(const PreparedTemplate& t, const cv::Rect& region) const;

 private:
  cv::Mat gray_;  // CV_32F
  cv::Mat sum_;   // CV_64F, (h+1) x (w+1)
  cv::Mat sqsum_;
};

struct NccOptions {
  std::vector<double> scales{0.75, 1.0, 1.33};
  int stride = 4;
  // Coarse maxima refined by the +-stride exhaustive pass.
  int refine_candidates = 3;
};

// ZNCC of `templ` against the window of `frame` at (x, y); both images are
// converted to grayscale first. Throws InvalidArgument if the window leaves
// the frame.
double ncc_at(const cv::Mat& frame, const cv::Mat& templ, int x, int y);

// Multi-scale sliding-window ZNCC: coarse grid at `stride`, then a +-stride
// exhaustive refinement around the best coarse positions of each scale.
// Returns the best window and its correlation in [-1, 1]. Scales at which
// the resized template does not fit are skipped; throws InvalidArgument when
// no scale fits.
ScoredBox ncc_score(const cv::Mat& frame, const cv::Mat& templ, const NccOptions& opts = {});

// Same as ncc_score on an already prepared plane and gray template.
ScoredBox ncc_score(const CorrelationPlane& plane, const cv::Mat& gray_templ,
                    const NccOptions& opts = {});

}  // namespace vq2d
