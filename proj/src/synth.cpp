#include "vq2d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

namespace vq2d::synth {
namespace {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::size_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Low-frequency colour field: coarse random grid upsampled with cubic
// interpolation.
cv::Mat smooth_background(Rng& rng, int width, int height) {
  cv::Mat coarse(height / 16 + 2, width / 16 + 2, CV_8UC3);
  for (int y = 0; y < coarse.rows; ++y) {
    for (int x = 0; x < coarse.cols; ++x) {
      auto& px = coarse.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) px[c] = static_cast<std::uint8_t>(uniform(rng, 60, 190));
    }
  }
  cv::Mat bg;
  cv::resize(coarse, bg, cv::Size(width, height), 0, 0, cv::INTER_CUBIC);
  return bg;
}

// Random colour cells of 4x4 pixels.
cv::Mat cell_texture(Rng& rng, int width, int height) {
  constexpr int kCell = 4;
  cv::Mat tex(height, width, CV_8UC3);
  for (int cy = 0; cy < height; cy += kCell) {
    for (int cx = 0; cx < width; cx += kCell) {
      const cv::Vec3b colour(static_cast<std::uint8_t>(uniform(rng, 0, 255)),
                             static_cast<std::uint8_t>(uniform(rng, 0, 255)),
                             static_cast<std::uint8_t>(uniform(rng, 0, 255)));
      const cv::Rect cell = cv::Rect(cx, cy, kCell, kCell) & cv::Rect(0, 0, width, height);
      tex(cell).setTo(colour);
    }
  }
  return tex;
}

cv::Mat perturb(const cv::Mat& tex, Rng& rng, double sigma) {
  if (sigma <= 0.0) return tex.clone();
  cv::Mat noise(tex.size(), CV_32FC3);
  std::normal_distribution<float> gauss(0.0f, static_cast<float>(sigma));
  for (auto it = noise.begin<cv::Vec3f>(); it != noise.end<cv::Vec3f>(); ++it) {
    *it = cv::Vec3f(gauss(rng), gauss(rng), gauss(rng));
  }
  cv::Mat f;
  tex.convertTo(f, CV_32FC3);
  f += noise;
  cv::Mat out;
  f.convertTo(out, CV_8UC3);
  return out;
}

void paste(cv::Mat& frame, const cv::Mat& patch, int x, int y) {
  patch.copyTo(frame(cv::Rect(x, y, patch.cols, patch.rows)));
}

struct Motion {
  double x0, y0, vx, vy;

  cv::Point at(std::int64_t t) const {
    return {static_cast<int>(std::lround(x0 + vx * static_cast<double>(t))),
            static_cast<int>(std::lround(y0 + vy * static_cast<double>(t)))};
  }
};

// Linear motion over `steps` frames keeping a w x h footprint inside the frame.
Motion plan_motion(Rng& rng, int width, int height, int w, int h, std::int64_t steps) {
  const double span = static_cast<double>(std::max<std::int64_t>(steps - 1, 0));
  double vx = uniform_real(rng, -1.5, 1.5);
  double vy = uniform_real(rng, -1.0, 1.0);
  auto axis = [&](double& v, int extent, int size) {
    double lo = std::max(0.0, -v * span);
    double hi = static_cast<double>(extent - size) - std::max(0.0, v * span);
    if (hi < lo) {
      v = 0.0;
      lo = 0.0;
      hi = extent - size;
    }
    return hi > lo ? uniform_real(rng, lo, hi) : lo;
  };
  const double x0 = axis(vx, width, w);
  const double y0 = axis(vy, height, h);
  return {x0, y0, vx, vy};
}

}  // namespace

void SynthConfig::validate() const {
  if (num_videos < 1) throw InvalidArgument("synth needs at least one video");
  if (frames_per_video < 2) throw InvalidArgument("synth needs at least 2 frames per video");
  if (width < 32 || height < 32) throw InvalidArgument("synth frames must be at least 32x32");
  if (min_target_size < 4 || max_target_size < min_target_size) {
    throw InvalidArgument("synth target size range is invalid");
  }
  const int needed_w = ambiguous_context ? 2 * max_target_size : max_target_size;
  if (needed_w > width || max_target_size > height) {
    throw InvalidArgument("target of up to " + std::to_string(max_target_size) +
                          " px does not fit in a " + std::to_string(width) + "x" +
                          std::to_string(height) + " frame");
  }
  if (!(appearance_gap >= 0.0)) throw InvalidArgument("appearance_gap must be >= 0");
}

std::string video_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "vid%04zu", index);
  return buf;
}

RenderedVideo render_video(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  Rng rng = make_rng(cfg.rng_seed, index, 1);
  Rng tex_rng = make_rng(cfg.texture_seed, index, 2);
  const int W = cfg.width;
  const int H = cfg.height;
  const std::int64_t N = cfg.frames_per_video;
  const std::string vid = video_name(index);

  // Timeline: [s, e] < q, with background-only frames reserved after e.
  const std::int64_t q = std::max<std::int64_t>(1, N - 1 - uniform(rng, 0, std::min<std::int64_t>(3, (N - 2) / 4)));
  const std::int64_t tail = std::min<std::int64_t>(8, q / 3);
  const std::int64_t hi_len = std::max<std::int64_t>(1, std::min<std::int64_t>(20, (q - tail) / 2));
  const std::int64_t lo_len = std::max<std::int64_t>(1, std::min<std::int64_t>(8, hi_len));
  const std::int64_t len = uniform(rng, lo_len, hi_len);
  const std::int64_t s = uniform(rng, 0, q - tail - len);
  const std::int64_t e = s + len - 1;

  // Appearance.
  const int tw = static_cast<int>(uniform(tex_rng, cfg.min_target_size, cfg.max_target_size));
  const int th = static_cast<int>(uniform(tex_rng, cfg.min_target_size, cfg.max_target_size));
  const cv::Mat texture = cell_texture(tex_rng, tw, th);
  const cv::Mat in_video = perturb(texture, tex_rng, cfg.appearance_gap);
  cv::Mat context_tex;
  int cw = 0;
  if (cfg.ambiguous_context) {
    cw = static_cast<int>(uniform(tex_rng, tw / 2, tw));
    context_tex = cell_texture(tex_rng, cw, th);
  }
  const int footprint_w = tw + cw;

  const cv::Mat background = smooth_background(rng, W, H);
  const Motion motion = plan_motion(rng, W, H, footprint_w, th, len);

  VideoInfo info{vid, FrameInterval(FrameIndex(s), FrameIndex(e)), FrameIndex(q), {}, {}, {}, {}};
  std::vector<cv::Mat> frames;

  cv::Mat distractor_tex;
  cv::Point distractor_pos;
  if (cfg.distractor_similar && q - 1 - (e + 2) >= 1) {
    Rng drng = make_rng(cfg.rng_seed, index, 4);
    const std::int64_t ds = uniform(drng, e + 2, q - 2);
    const std::int64_t de = uniform(drng, ds + 1, q - 1);
    info.distractor_span = FrameInterval(FrameIndex(ds), FrameIndex(de));
    distractor_tex = perturb(texture, drng, cfg.appearance_gap * uniform_real(drng, 0.5, 1.5));
    distractor_pos = {static_cast<int>(uniform(drng, 0, W - tw)), static_cast<int>(uniform(drng, 0, H - th))};
    info.distractor_box = Box(distractor_pos.x, distractor_pos.y, tw, th);
  }

  std::vector<bool> blurred(static_cast<std::size_t>(N), false);
  if (cfg.blur_background) {
    Rng brng = make_rng(cfg.rng_seed, index, 5);
    std::optional<std::int64_t> first_outside;
    for (std::int64_t f = 0; f < N; ++f) {
      if (f >= s && f <= e) continue;
      if (!first_outside) first_outside = f;
      blurred[static_cast<std::size_t>(f)] = uniform(brng, 0, 1) == 1;
    }
    if (first_outside && std::none_of(blurred.begin(), blurred.end(), [](bool b) { return b; })) {
      blurred[static_cast<std::size_t>(*first_outside)] = true;
    }
  }

  std::vector<Box> gt_boxes;
  frames.reserve(static_cast<std::size_t>(N));
  for (std::int64_t f = 0; f < N; ++f) {
    cv::Mat frame = background.clone();
    const cv::Point pos = motion.at(std::clamp<std::int64_t>(f, s, e) - s);
    if (cfg.ambiguous_context) {
      paste(frame, context_tex, pos.x + tw, pos.y);
      if (f == 0) info.context_box = Box(pos.x + tw, pos.y, cw, th);
    }
    if (info.distractor_span && info.distractor_span->contains(FrameIndex(f))) {
      paste(frame, distractor_tex, distractor_pos.x, distractor_pos.y);
    }
    if (f >= s && f <= e) {
      paste(frame, in_video, pos.x, pos.y);
      gt_boxes.emplace_back(pos.x, pos.y, tw, th);
    }
    if (blurred[static_cast<std::size_t>(f)]) {
      cv::GaussianBlur(frame, frame, cv::Size(0, 0), 2.5);
      info.blurred_frames.push_back(f);
    }
    frames.push_back(std::move(frame));
  }

  // Clean registration crop on an unrelated background.
  Rng crop_rng = make_rng(cfg.rng_seed, index, 3);
  cv::Mat crop_scene = smooth_background(crop_rng, W, H);
  const int cx = static_cast<int>(uniform(crop_rng, 0, W - footprint_w));
  const int cy = static_cast<int>(uniform(crop_rng, 0, H - th));
  paste(crop_scene, texture, cx, cy);
  if (cfg.ambiguous_context) paste(crop_scene, context_tex, cx + tw, cy);

  io::AnnotationRecord record{
      VisualQuery{"q_" + vid, vid, FrameIndex(q), vid + "_crop", FrameIndex(0),
                  Box(cx, cy, footprint_w, th)},
      ResponseTrack(vid, FrameIndex(s), std::move(gt_boxes))};
  return RenderedVideo{std::move(info), std::move(record), std::move(frames), std::move(crop_scene)};
}

SynthDataset generate_in_memory(const SynthConfig& cfg, InMemoryFrameStore& store) {
  cfg.validate();
  SynthDataset ds;
  for (std::size_t i = 0; i < cfg.num_videos; ++i) {
    RenderedVideo v = render_video(cfg, i);
    store.add(std::make_shared<InMemoryFrameSource>(v.info.video_id, std::move(v.frames)));
    store.add(std::make_shared<InMemoryFrameSource>(v.record.query.crop_video_id,
                                                    std::vector<cv::Mat>{v.crop_scene}));
    ds.annotations.records.push_back(std::move(v.record));
    ds.videos.push_back(std::move(v.info));
  }
  return ds;
}

SynthDataset synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto frames_root = out_dir / "frames";
  SynthDataset ds;
  std::string scenario = nlohmann::ordered_json{{"schema_version", io::kSchemaVersion}, {"kind", "scenario"}}.dump() + "\n";
  for (std::size_t i = 0; i < cfg.num_videos; ++i) {
    RenderedVideo v = render_video(cfg, i);
    for (std::size_t f = 0; f < v.frames.size(); ++f) {
      io::write_frame(io::frame_path(frames_root, v.info.video_id, FrameIndex(static_cast<std::int64_t>(f))),
                      v.frames[f]);
    }
    io::write_frame(io::frame_path(frames_root, v.record.query.crop_video_id, FrameIndex(0)), v.crop_scene);

    nlohmann::ordered_json rec{{"video_id", v.info.video_id},
                               {"target_span", {v.info.target_span.start.value(), v.info.target_span.end.value()}},
                               {"query_frame", v.info.query_frame.value()},
                               {"blurred_frames", v.info.blurred_frames}};
    if (v.info.distractor_span) {
      const Box& b = *v.info.distractor_box;
      rec["distractor"] = {{"span", {v.info.distractor_span->start.value(), v.info.distractor_span->end.value()}},
                           {"box", {{"x", b.x()}, {"y", b.y()}, {"w", b.w()}, {"h", b.h()}}}};
    }
    scenario += rec.dump() + "\n";

    ds.annotations.records.push_back(std::move(v.record));
    ds.videos.push_back(std::move(v.info));
  }
  io::save_annotation_file(out_dir / "annotations.jsonl", ds.annotations);
  io::write_text(out_dir / "scenario.jsonl", scenario);
  return ds;
}

}  // namespace vq2d::synth
