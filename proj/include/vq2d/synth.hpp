#pragma once

// Synthetic visual-query videos. Each video plants one uniquely textured
// target rectangle that moves linearly over a known contiguous span, on a
// smooth static background. Optional scenarios reproduce common retrieval
// failures:
//   distractor_similar  a near-identical copy of the target shows up in
//                       background-only frames after the true appearance;
//   ambiguous_context   a context object sits next to the target inside the
//                       visual crop and stays visible in every frame;
//   blur_background     some background-only frames are Gaussian-blurred.
// Everything is reproducible from the two seeds.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vq2d/io.hpp"
#include "vq2d/pipeline.hpp"

namespace vq2d::synth {

struct SynthConfig {
  std::size_t num_videos = 50;
  std::int64_t frames_per_video = 60;
  int width = 160;
  int height = 120;
  std::uint64_t texture_seed = 7;
  std::uint64_t rng_seed = 1;
  bool distractor_similar = false;
  bool ambiguous_context = false;
  bool blur_background = false;
  int min_target_size = 20;
  int max_target_size = 32;
  // Per-pixel std of the static appearance change between the clean visual
  // crop and the target as it appears in the video.
  double appearance_gap = 16.0;

  void validate() const;
};

struct VideoInfo {
  std::string video_id;
  FrameInterval target_span;
  FrameIndex query_frame;
  std::optional<FrameInterval> distractor_span;
  std::optional<Box> distractor_box;
  std::optional<Box> context_box;  // position while the target is hidden, first frame
  std::vector<std::int64_t> blurred_frames;
};

struct SynthDataset {
  io::AnnotationFile annotations;
  std::vector<VideoInfo> videos;
};

// Rendered frames of one video plus its crop scene.
struct RenderedVideo {
  VideoInfo info;
  io::AnnotationRecord record;
  std::vector<cv::Mat> frames;
  cv::Mat crop_scene;
};

RenderedVideo render_video(const SynthConfig& cfg, std::size_t index);

// Renders every video into an in-memory store (videos plus "<id>_crop"
// scenes).
SynthDataset generate_in_memory(const SynthConfig& cfg, InMemoryFrameStore& store);

// Writes <out>/frames/<video_id>/<frame>.png, <out>/annotations.jsonl and
// <out>/scenario.jsonl. Throws InvalidArgument when the target does not fit
// in the frame.
SynthDataset synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

std::string video_name(std::size_t index);

}  // namespace vq2d::synth
