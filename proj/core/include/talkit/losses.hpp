#pragma once

#include <cstdint>
#include <vector>

#include "talkit/graph.hpp"
#include "talkit/labels.hpp"

namespace talkit {

// Pair-selection masks over a length-T binary label vector, row-major T*T.
// both_positive[i*T+j] = g_i & g_j, both_negative = (1-g_i) & (1-g_j),
// cross = g_i & (1-g_j) (ordered positive->negative pairs, counted once).
// Diagonals are included in the same-set masks, so the counts satisfy
// n_positive + n_negative + 2*n_cross = T*T.
struct PairMasks {
  int len = 0;
  std::vector<uint8_t> both_positive;
  std::vector<uint8_t> both_negative;
  std::vector<uint8_t> cross;
  long n_positive = 0;
  long n_negative = 0;
  long n_cross = 0;
};

PairMasks build_pair_masks(const std::vector<uint8_t>& g);

// Intra-phase consistency of one probability phase against its binary labels:
// mean pairwise |p_i - p_j| inside the positive set, plus the same inside the
// negative set, plus (1 - mean cross-pair |p_i - p_j|). Terms whose pair set
// is empty are omitted, including the cross term's leading 1. Result is in
// [0, 3] and differentiable w.r.t. p.
//
// intra_consistency evaluates all T^2 pairs directly; intra_consistency_fast
// computes the same value and gradient from sorted prefix sums in O(T log T).
Value intra_consistency(Graph& g, Value p, const std::vector<uint8_t>& labels);
Value intra_consistency_fast(Graph& g, Value p, const std::vector<uint8_t>& labels);

// Inter-phase consistency: ties the first difference of the continuing phase
// to the starting (rises) and ending (drops) phases,
//   (1/(T-1)) * sum_t |max(0, dp_t) - p^S_t| + |-min(0, dp_t) - p^E_t|
// with dp_t = p^C_{t+1} - p^C_t aligned at t = 0..T-2. Requires T >= 2.
Value inter_consistency(Graph& g, Value p_continue, Value p_start, Value p_end);

// Balanced binary cross-entropy: positive and negative frames are averaged
// separately and mixed 1:1. Probabilities are clamped to
// [kProbClamp, 1 - kProbClamp] before the logs. A side with no members
// contributes 0.
Value phase_cls_loss(Graph& g, Value p, const std::vector<uint8_t>& labels);

// Smooth-L1 boundary offset regression, averaged over the masked frames of
// each boundary separately. Zero when both masks are empty.
Value regression_loss(Graph& g, Value offset_start, Value offset_end,
                      const OffsetTargets& targets);

struct LossWeights {
  double cls = 1.0;
  double reg = 1.0;
  double intra = 1.0;
  double inter = 1.0;
};

// All scalars with their loss weight already applied, so
// l_total = l_cls + l_reg + l_intra + l_inter for every weight setting.
struct LossReport {
  double l_continue = 0.0;
  double l_start = 0.0;
  double l_end = 0.0;
  double l_cls = 0.0;
  double l_reg = 0.0;
  double l_intra_continue = 0.0;
  double l_intra_start = 0.0;
  double l_intra_end = 0.0;
  double l_intra = 0.0;
  double l_inter = 0.0;
  double l_total = 0.0;

  // name of the first non-finite component, or nullptr when all are finite
  const char* first_non_finite() const;
};

struct TotalLoss {
  Value total;       // scalar graph node
  LossReport report;
};

// Classification on all three phases, offset regression, intra consistency on
// each phase, and inter consistency, combined with the given weights.
// Components with weight 0 are skipped entirely.
TotalLoss total_loss(Graph& g, Value p_continue, Value p_start, Value p_end, Value offset_start,
                     Value offset_end, const PhaseLabels& labels, const OffsetTargets& targets,
                     const LossWeights& weights = {}, bool fast_intra = true);

}  // namespace talkit
