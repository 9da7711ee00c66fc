#pragma once

// Training-batch construction with negative frames: proposal labelling,
// hard-negative mining and positive:negative balancing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vq2d/core.hpp"

namespace vq2d {

struct Proposal {
  std::string proposal_id;
  std::string video_id;
  FrameIndex frame;
  Box box;
  std::optional<double> loss;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

// Ground-truth response of the query the proposals are labelled against.
struct GroundTruthContext {
  std::string video_id;
  ResponseTrack track;
};

enum class ProposalLabel { kPositive, kNegative };

// Why a proposal is negative; kNone for positives.
enum class NegativeReason {
  kNone,
  kLowOverlap,     // inside [s, e] but IoU with the gt box < 0.5
  kOutsideTrack,   // frame outside [s, e] of the same video
  kOtherVideo,     // sampled from a different video
};

struct BatchSpec {
  std::int64_t ratio_pos = 1;
  std::int64_t ratio_neg = 64;
  std::int64_t mining_k = 32;

  void validate() const;
  // Negatives allowed for `num_positives` positives.
  std::size_t target_negatives(std::size_t num_positives) const;
};

struct Batch {
  std::vector<Proposal> positives;
  std::vector<Proposal> negatives;  // mined ones first, then random fill
  std::size_t num_mined = 0;
  bool under_filled = false;

  friend bool operator==(const Batch&, const Batch&) = default;
};

inline constexpr double kPositiveIou = 0.5;

NegativeReason negative_reason(const Proposal& p, const GroundTruthContext& ctx);

// Negative when the proposal comes from another video, lies outside the
// track's [s, e], or overlaps the gt box on its frame with IoU < 0.5.
ProposalLabel classify_proposal(const Proposal& p, const GroundTruthContext& ctx);

// The k negatives with the highest loss, in descending loss order; ties keep
// input order. Throws InvalidArgument if any proposal lacks a loss.
std::vector<Proposal> mine_hard_negatives(std::span<const Proposal> negatives, std::size_t k);

// Keeps every positive and up to ratio_neg/ratio_pos negatives per positive:
// first the min(mining_k, target) hardest, then a seeded uniform draw without
// replacement from the rest. With too few negatives all are kept and the
// batch is flagged under_filled. Throws InvalidArgument without positives.
Batch balance_batch(std::span<const Proposal> positives, std::span<const Proposal> negatives,
                    const BatchSpec& spec, std::uint64_t seed);

}  // namespace vq2d
