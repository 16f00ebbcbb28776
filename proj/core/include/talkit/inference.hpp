#pragma once

#include <span>
#include <vector>

#include "talkit/labels.hpp"
#include "talkit/tensor.hpp"

namespace talkit {

// Candidate action segment over real-valued frame positions (refinement may
// move boundaries off the integer grid). class_id is -1 until assigned.
struct Proposal {
  double start = 0.0;
  double end = 0.0;
  double score = 0.0;
  int class_id = -1;
};

// Candidate boundary frames: the union of frames above
// 0.5 * (max p + min p) and strict interior local maxima
// (p[t-1] < p[t] > p[t+1]). With rise_rule, the second rule instead keeps
// frames on a strict rise (p[t-1] < p[t] < p[t+1]). Returned sorted.
std::vector<int> select_candidates(std::span<const double> p, bool rise_rule = false);

// All start/end pairs with start < end and end - start <= max_duration.
// max_duration comes from the longest training instance.
std::vector<Proposal> generate_proposals(const std::vector<int>& starts,
                                         const std::vector<int>& ends, int max_duration);

// score = p_start[t_s] * p_end[t_e] (boundaries must be on the integer grid).
void score_proposals(std::vector<Proposal>& proposals, std::span<const double> p_start,
                     std::span<const double> p_end);

// Shifts each boundary by the predicted offset at its (rounded) frame,
// clipping to [0, T]. A refinement that would invert or collapse the segment
// is discarded and the original boundaries kept.
void refine_boundaries(std::vector<Proposal>& proposals, std::span<const double> offset_start,
                       std::span<const double> offset_end);

struct SoftNmsConfig {
  double sigma = 0.5;        // gaussian decay scale
  double score_floor = 1e-3; // proposals decayed below this are dropped
  int top_k = 200;           // maximum selections
  bool linear = false;       // linear (1 - tIoU) decay instead of gaussian
};

// Greedy Soft-NMS: repeatedly select the highest-scoring proposal and decay
// every remaining score by overlap. Output is in selection order, which is
// sorted by final score descending. Ties break on (start, end) ascending.
std::vector<Proposal> soft_nms(std::vector<Proposal> proposals, const SoftNmsConfig& config = {});

struct ProposalPipelineConfig {
  int max_duration = 0;
  bool rise_rule = false;
  bool refine = true;
  bool refine_before_scoring = false;
  SoftNmsConfig nms;
};

// Per-window pipeline up to (but excluding) Soft-NMS: candidate selection,
// pairing, scoring, refinement. The caller concatenates windows (shifting by
// the window offset) and runs soft_nms once per video.
std::vector<Proposal> propose_window(std::span<const double> p_start,
                                     std::span<const double> p_end,
                                     std::span<const double> offset_start,
                                     std::span<const double> offset_end,
                                     const ProposalPipelineConfig& config);

// Mean feature vector of each class over its annotated training frames.
// Used as a minimal stand-in for an external proposal classifier.
std::vector<std::vector<double>> estimate_class_means(
    const std::vector<std::pair<const Tensor*, const AnnotationSet*>>& videos, int num_classes);

// Assigns each proposal the nearest class mean of its averaged feature span.
void classify_proposals(std::vector<Proposal>& proposals, const Tensor& features,
                        const std::vector<std::vector<double>>& class_means);

}  // namespace talkit
