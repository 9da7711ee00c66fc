#pragma once

// File formats. Every metadata file is JSON Lines: a header line
// {"schema_version":1,"kind":"<kind>"} followed by one record per line.
// Frames live as lossless PNGs under <root>/<video_id>/<frame:06d>.png.

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vq2d/harness.hpp"
#include "vq2d/metrics.hpp"
#include "vq2d/pipeline.hpp"
#include "vq2d/sampler.hpp"

namespace vq2d::io {

inline constexpr int kSchemaVersion = 1;

inline constexpr std::string_view kAnnotationsKind = "annotations";
inline constexpr std::string_view kDetectionsKind = "detections";
inline constexpr std::string_view kPredictionsKind = "predictions";
inline constexpr std::string_view kProposalsKind = "proposals";
inline constexpr std::string_view kBatchesKind = "batches";
inline constexpr std::string_view kReportKind = "report";

struct AnnotationRecord {
  VisualQuery query;
  ResponseTrack gt_track;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct AnnotationFile {
  std::vector<AnnotationRecord> records;

  friend bool operator==(const AnnotationFile&, const AnnotationFile&) = default;
};

struct ProposalRecord {
  std::string query_id;
  Proposal proposal;

  friend bool operator==(const ProposalRecord&, const ProposalRecord&) = default;
};

struct BatchRecord {
  std::string query_id;
  Batch batch;

  friend bool operator==(const BatchRecord&, const BatchRecord&) = default;
};

// Text (de)serialization. Parsers take a source name used in diagnostics and
// throw IoError / UnsupportedSchema / InvalidArgument naming the line, the
// query and the field at fault.
std::string dump_annotations(const AnnotationFile& file);
AnnotationFile parse_annotations(std::string_view text, const std::string& source = "<annotations>");

std::string dump_detections(const DetectionTable& table);
DetectionTable parse_detections(std::string_view text, const std::string& source = "<detections>");

std::string dump_predictions(const std::vector<QueryOutcome>& outcomes);
std::vector<QueryOutcome> parse_predictions(std::string_view text,
                                            const std::string& source = "<predictions>");

std::string dump_proposals(const std::vector<ProposalRecord>& proposals);
std::vector<ProposalRecord> parse_proposals(std::string_view text,
                                            const std::string& source = "<proposals>");

std::string dump_batches(const std::vector<BatchRecord>& batches);
std::vector<BatchRecord> parse_batches(std::string_view text, const std::string& source = "<batches>");

// Flat key/value report, as one JSON object or as "key value" lines.
std::string report_json(const EvalReport& report, const MetricConfig& cfg);
std::string report_text(const EvalReport& report, const MetricConfig& cfg);

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_text(const std::filesystem::path& path, std::string_view text);

AnnotationFile load_annotation_file(const std::filesystem::path& path);
void save_annotation_file(const std::filesystem::path& path, const AnnotationFile& file);

// Groups the annotation records by video (groups sorted by video_id, queries
// in file order) and collects the ground truth.
Workload to_workload(const AnnotationFile& file);
Workload load_annotations(const std::filesystem::path& path);

DetectionTable load_detections(const std::filesystem::path& path);
void save_detections(const std::filesystem::path& path, const DetectionTable& table);

std::vector<QueryOutcome> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const std::vector<QueryOutcome>& outcomes);

std::vector<ProposalRecord> load_proposals(const std::filesystem::path& path);
void save_proposals(const std::filesystem::path& path, const std::vector<ProposalRecord>& proposals);

std::vector<BatchRecord> load_batches(const std::filesystem::path& path);
void save_batches(const std::filesystem::path& path, const std::vector<BatchRecord>& batches);

std::filesystem::path frame_path(const std::filesystem::path& root, const std::string& video_id,
                                 FrameIndex f);

// Writes an 8-bit image losslessly (PNG).
void write_frame(const std::filesystem::path& path, const cv::Mat& image);

// Frames of one video on disk. Decoded frames are cached; frame() may be
// called from several threads.
class DirectoryFrameSource : public FrameSource {
 public:
  DirectoryFrameSource(std::filesystem::path root, std::string video_id);

  const std::string& video_id() const override { return video_id_; }
  std::int64_t num_frames() const override { return num_frames_; }
  cv::Mat frame(FrameIndex f) const override;

 private:
  std::filesystem::path root_;
  std::string video_id_;
  std::int64_t num_frames_ = 0;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::int64_t, cv::Mat> cache_;
};

// Opens a fresh DirectoryFrameSource per call, so each evaluation group owns
// its cache.
class DirectoryFrameStore : public FrameStore {
 public:
  explicit DirectoryFrameStore(std::filesystem::path root);

  std::shared_ptr<const FrameSource> open(const std::string& video_id) const override;

 private:
  std::filesystem::path root_;
};

}  // namespace vq2d::io
