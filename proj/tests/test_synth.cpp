#include "doctest.h"

#include <filesystem>

#include "vq2d/synth.hpp"

using namespace vq2d;
using namespace vq2d::synth;

namespace {

bool same_image(const cv::Mat& a, const cv::Mat& b) {
  return a.size() == b.size() && a.type() == b.type() && cv::norm(a, b, cv::NORM_INF) == 0.0;
}

SynthConfig small() {
  SynthConfig cfg;
  cfg.num_videos = 4;
  cfg.frames_per_video = 40;
  return cfg;
}

}  // namespace

TEST_CASE("ground truth matches the planted timeline") {
  for (std::size_t i = 0; i < 10; ++i) {
    const auto v = render_video(small(), i);
    const auto& gt = v.record.gt_track;
    CHECK(v.frames.size() == 40);
    CHECK(gt.start() == v.info.target_span.start);
    CHECK(gt.end() == v.info.target_span.end);
    CHECK(gt.end() < v.record.query.query_frame);
    CHECK(v.record.query.query_frame.value() < 40);
    for (const auto& b : gt.boxes()) {
      CHECK(b.x() >= 0);
      CHECK(b.right() <= 160);
      CHECK(b.bottom() <= 120);
    }
  }
}

TEST_CASE("rendering is reproducible") {
  const auto a = render_video(small(), 2);
  const auto b = render_video(small(), 2);
  CHECK(a.record == b.record);
  for (std::size_t f = 0; f < a.frames.size(); ++f) CHECK(same_image(a.frames[f], b.frames[f]));
  SynthConfig other = small();
  other.rng_seed = 99;
  CHECK_FALSE(render_video(other, 2).record == a.record);
}

TEST_CASE("blur touches only background frames") {
  SynthConfig cfg = small();
  cfg.blur_background = true;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto plain = render_video(small(), i);
    const auto blurry = render_video(cfg, i);
    CHECK(blurry.record == plain.record);
    REQUIRE_FALSE(blurry.info.blurred_frames.empty());
    for (std::int64_t f : blurry.info.blurred_frames) CHECK_FALSE(blurry.info.target_span.contains(FrameIndex(f)));
    for (std::int64_t f = 0; f < 40; ++f) {
      const bool was_blurred = std::count(blurry.info.blurred_frames.begin(), blurry.info.blurred_frames.end(), f) > 0;
      const auto k = static_cast<std::size_t>(f);
      CHECK(same_image(plain.frames[k], blurry.frames[k]) == !was_blurred);
    }
  }
}

TEST_CASE("distractor appears after the target and before the query") {
  SynthConfig cfg = small();
  cfg.distractor_similar = true;
  int with = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto v = render_video(cfg, i);
    if (!v.info.distractor_span) continue;
    ++with;
    CHECK(v.info.distractor_span->start > v.info.target_span.end);
    CHECK(v.info.distractor_span->end < v.info.query_frame);
    CHECK(v.record == render_video(small(), i).record);
  }
  CHECK(with >= 8);
}

TEST_CASE("ambiguous context widens the crop") {
  SynthConfig cfg = small();
  cfg.ambiguous_context = true;
  const auto v = render_video(cfg, 0);
  REQUIRE(v.info.context_box.has_value());
  CHECK(v.record.query.crop_box.w() > v.record.gt_track.boxes()[0].w());
}

TEST_CASE("config validation") {
  SynthConfig cfg = small();
  cfg.width = 24;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small();
  cfg.max_target_size = 200;
  CHECK_THROWS_AS(render_video(cfg, 0), InvalidArgument);
  cfg = small();
  cfg.frames_per_video = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("datasets on disk are byte-identical across runs") {
  const auto root = std::filesystem::temp_directory_path() / "vq2d_test_synth";
  std::filesystem::remove_all(root);
  SynthConfig cfg = small();
  cfg.num_videos = 2;
  cfg.frames_per_video = 12;
  const auto a = synth_generate(cfg, root / "a");
  synth_generate(cfg, root / "b");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), root / "a");
    CHECK(io::read_text(entry.path()) == io::read_text(root / "b" / rel));
    ++files;
  }
  CHECK(files == 2 * 12 + 2 + 2);
  CHECK(io::load_annotation_file(root / "a" / "annotations.jsonl") == a.annotations);
  std::filesystem::remove_all(root);
}
