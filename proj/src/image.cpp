#include "vq2d/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/imgproc.hpp>

namespace vq2d {

cv::Mat to_gray(const cv::Mat& image) {
  if (image.empty()) throw InvalidArgument("cannot convert an empty image to grayscale");
  cv::Mat f;
  image.convertTo(f, CV_32F);
  if (f.channels() == 1) return f;
  cv::Mat gray;
  if (f.channels() == 3) {
    cv::cvtColor(f, gray, cv::COLOR_BGR2GRAY);
  } else if (f.channels() == 4) {
    cv::cvtColor(f, gray, cv::COLOR_BGRA2GRAY);
  } else {
    throw InvalidArgument("unsupported channel count " + std::to_string(f.channels()));
  }
  return gray;
}

cv::Rect pixel_rect(const Box& box, const cv::Size& image_size) {
  const int x0 = std::max(0, static_cast<int>(std::lround(box.x())));
  const int y0 = std::max(0, static_cast<int>(std::lround(box.y())));
  const int x1 = std::min(image_size.width, static_cast<int>(std::lround(box.right())));
  const int y1 = std::min(image_size.height, static_cast<int>(std::lround(box.bottom())));
  if (x1 <= x0 || y1 <= y0) {
    throw InvalidArgument("box does not cover any pixel of a " + std::to_string(image_size.width) +
                          "x" + std::to_string(image_size.height) + " image");
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

Box to_box(const cv::Rect& r) { return Box(r.x, r.y, r.width, r.height); }

PreparedTemplate::PreparedTemplate(const cv::Mat& gray) {
  if (gray.empty() || gray.type() != CV_32F) {
    throw InvalidArgument("template must be a non-empty CV_32F plane");
  }
  const double mean = cv::mean(gray)[0];
  gray.convertTo(centered_, CV_32F, 1.0, -mean);
  norm_ = cv::norm(centered_, cv::NORM_L2);
  // Integer-valued 8-bit sources give either exactly 0 or >= ~0.7 here.
  flat_ = norm_ < 1e-6;
}

CorrelationPlane::CorrelationPlane(const cv::Mat& gray) : gray_(gray) {
  if (gray.empty() || gray.type() != CV_32F) {
    throw InvalidArgument("correlation plane needs a non-empty CV_32F image");
  }
  cv::integral(gray_, sum_, sqsum_, CV_64F, CV_64F);
}

double CorrelationPlane::score(const PreparedTemplate& t, int x, int y) const {
  const int tw = t.width();
  const int th = t.height();
  if (t.flat_) return 0.0;

  const double n = static_cast<double>(tw) * th;
  auto box_sum = [&](const cv::Mat& integral) {
    return integral.at<double>(y + th, x + tw) - integral.at<double>(y, x + tw) -
           integral.at<double>(y + th, x) + integral.at<double>(y, x);
  };
  const double s = box_sum(sum_);
  const double s2 = box_sum(sqsum_);
  const double var = s2 - s * s / n;
  if (var <= 1e-8 * n) return 0.0;

  double num = 0.0;
  for (int r = 0; r < th; ++r) {
    const float* trow = t.centered_.ptr<float>(r);
    const float* frow = gray_.ptr<float>(y + r) + x;
    float acc = 0.0f;
    for (int c = 0; c < tw; ++c) acc += trow[c] * frow[c];
    num += acc;
  }
  return std::clamp(num / (std::sqrt(var) * t.norm_), -1.0, 1.0);
}

std::optional<ScoredBox> CorrelationPlane::search(const PreparedTemplate& t,
                                                  const cv::Rect& region) const {
  const cv::Rect r = region & cv::Rect(0, 0, width(), height());
  if (r.width < t.width() || r.height < t.height()) return std::nullopt;
  double best = -2.0;
  cv::Point best_pos;
  for (int y = r.y; y + t.height() <= r.y + r.height; ++y) {
    for (int x = r.x; x + t.width() <= r.x + r.width; ++x) {
      const double s = score(t, x, y);
      if (s > best) {
        best = s;
        best_pos = {x, y};
      }
    }
  }
  return ScoredBox{Box(best_pos.x, best_pos.y, t.width(), t.height()), best};
}

double ncc_at(const cv::Mat& frame, const cv::Mat& templ, int x, int y) {
  const cv::Mat g = to_gray(frame);
  const cv::Mat tg = to_gray(templ);
  if (x < 0 || y < 0 || x + tg.cols > g.cols || y + tg.rows > g.rows) {
    throw InvalidArgument("template window at (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") leaves the frame");
  }
  return CorrelationPlane(g).score(PreparedTemplate(tg), x, y);
}

namespace {

struct Candidate {
  double score;
  cv::Point pos;
};

std::vector<int> grid(int extent, int stride) {
  std::vector<int> g;
  for (int v = 0; v <= extent; v += stride) g.push_back(v);
  if (g.back() != extent) g.push_back(extent);
  return g;
}

}  // namespace

ScoredBox ncc_score(const CorrelationPlane& plane, const cv::Mat& gray_templ,
                    const NccOptions& opts) {
  if (opts.stride < 1) throw InvalidArgument("NCC stride must be >= 1");
  if (opts.scales.empty()) throw InvalidArgument("NCC needs at least one scale");

  std::optional<ScoredBox> best;
  for (const double scale : opts.scales) {
    if (!(scale > 0.0)) throw InvalidArgument("NCC scales must be positive");
    const int tw = static_cast<int>(std::lround(gray_templ.cols * scale));
    const int th = static_cast<int>(std::lround(gray_templ.rows * scale));
    if (tw < 2 || th < 2 || tw > plane.width() || th > plane.height()) continue;

    cv::Mat resized;
    if (tw == gray_templ.cols && th == gray_templ.rows) {
      resized = gray_templ;
    } else {
      const int interp = scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR;
      cv::resize(gray_templ, resized, cv::Size(tw, th), 0, 0, interp);
    }
    const PreparedTemplate prepared(resized);

    std::vector<Candidate> coarse;
    for (const int y : grid(plane.height() - th, opts.stride)) {
      for (const int x : grid(plane.width() - tw, opts.stride)) {
        coarse.push_back({plane.score(prepared, x, y), {x, y}});
      }
    }
    const auto keep = std::min<std::size_t>(coarse.size(),
                                            static_cast<std::size_t>(std::max(1, opts.refine_candidates)));
    std::stable_sort(coarse.begin(), coarse.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

    for (std::size_t i = 0; i < keep; ++i) {
      const cv::Point c = coarse[i].pos;
      const cv::Rect window(c.x - opts.stride, c.y - opts.stride, tw + 2 * opts.stride,
                            th + 2 * opts.stride);
      const auto refined = plane.search(prepared, window);
      if (refined && (!best || refined->score > best->score)) best = refined;
    }
  }
  if (!best) throw InvalidArgument("template does not fit the frame at any scale");
  return *best;
}

ScoredBox ncc_score(const cv::Mat& frame, const cv::Mat& templ, const NccOptions& opts) {
  return ncc_score(CorrelationPlane(to_gray(frame)), to_gray(templ), opts);
}

}  // namespace vq2d
