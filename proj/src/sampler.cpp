#include "vq2d/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace vq2d {

void BatchSpec::validate() const {
  if (ratio_pos < 1) throw InvalidArgument("batch ratio_pos must be >= 1");
  if (ratio_neg < 1) throw InvalidArgument("batch ratio_neg must be >= 1");
  if (mining_k < 1) throw InvalidArgument("batch mining_k must be >= 1");
}

std::size_t BatchSpec::target_negatives(std::size_t num_positives) const {
  return num_positives * static_cast<std::size_t>(ratio_neg) / static_cast<std::size_t>(ratio_pos);
}

NegativeReason negative_reason(const Proposal& p, const GroundTruthContext& ctx) {
  if (p.video_id != ctx.video_id) return NegativeReason::kOtherVideo;
  const auto gt = ctx.track.box_at(p.frame);
  if (!gt) return NegativeReason::kOutsideTrack;
  if (box_iou(p.box, *gt) < kPositiveIou) return NegativeReason::kLowOverlap;
  return NegativeReason::kNone;
}

ProposalLabel classify_proposal(const Proposal& p, const GroundTruthContext& ctx) {
  return negative_reason(p, ctx) == NegativeReason::kNone ? ProposalLabel::kPositive
                                                          : ProposalLabel::kNegative;
}

namespace {

std::vector<std::size_t> loss_order(std::span<const Proposal> props) {
  for (const auto& p : props) {
    if (!p.loss) throw InvalidArgument("proposal '" + p.proposal_id + "' has no loss to mine on");
  }
  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *props[a].loss > *props[b].loss; });
  return order;
}

}  // namespace

std::vector<Proposal> mine_hard_negatives(std::span<const Proposal> negatives, std::size_t k) {
  const auto order = loss_order(negatives);
  std::vector<Proposal> out;
  const std::size_t n = std::min(k, order.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(negatives[order[i]]);
  return out;
}

Batch balance_batch(std::span<const Proposal> positives, std::span<const Proposal> negatives,
                    const BatchSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (positives.empty()) throw InvalidArgument("cannot balance a batch without positives");

  Batch batch;
  batch.positives.assign(positives.begin(), positives.end());
  const std::size_t target = spec.target_negatives(positives.size());
  const std::size_t k = std::min(static_cast<std::size_t>(spec.mining_k), target);

  const auto order = loss_order(negatives);
  const std::size_t mined = std::min(k, order.size());
  batch.negatives.reserve(std::min(target, negatives.size()));
  for (std::size_t i = 0; i < mined; ++i) batch.negatives.push_back(negatives[order[i]]);
  batch.num_mined = mined;

  // Unmined pool, drawn by a partial Fisher-Yates shuffle.
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(mined), order.end());
  std::sort(pool.begin(), pool.end());
  std::mt19937_64 rng(seed);
  const std::size_t fill = std::min(target - mined, pool.size());
  for (std::size_t i = 0; i < fill; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    batch.negatives.push_back(negatives[pool[i]]);
  }
  batch.under_filled = batch.negatives.size() < target;
  return batch;
}

}  // namespace vq2d
