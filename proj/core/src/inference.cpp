#include "talkit/inference.hpp"

#include <algorithm>
#include <cmath>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

double segment_tiou(double s1, double e1, double s2, double e2) {
  double inter = std::min(e1, e2) - std::max(s1, s2);
  if (inter <= 0.0) return 0.0;
  double uni = (e1 - s1) + (e2 - s2) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool canonical_before(const Proposal& a, const Proposal& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.start != b.start) return a.start < b.start;
  return a.end < b.end;
}

}  // namespace

std::vector<int> select_candidates(std::span<const double> p, bool rise_rule) {
  const int t_len = static_cast<int>(p.size());
  if (t_len < 1) throw ContractError("select_candidates on an empty probability vector");
  double lo = p[0], hi = p[0];
  for (double v : p) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double threshold = 0.5 * (hi + lo);
  std::vector<int> out;
  for (int t = 0; t < t_len; ++t) {
    bool picked = p[static_cast<size_t>(t)] > threshold;
    if (!picked && t >= 1 && t <= t_len - 2) {
      double prev = p[static_cast<size_t>(t - 1)];
      double cur = p[static_cast<size_t>(t)];
      double next = p[static_cast<size_t>(t + 1)];
      picked = rise_rule ? (prev < cur && cur < next) : (prev < cur && cur > next);
    }
    if (picked) out.push_back(t);
  }
  return out;
}

std::vector<Proposal> generate_proposals(const std::vector<int>& starts,
                                         const std::vector<int>& ends, int max_duration) {
  std::vector<Proposal> out;
  for (int s : starts) {
    for (int e : ends) {
      if (e <= s) continue;
      if (e - s > max_duration) continue;
      out.push_back({static_cast<double>(s), static_cast<double>(e), 0.0, -1});
    }
  }
  return out;
}

void score_proposals(std::vector<Proposal>& proposals, std::span<const double> p_start,
                     std::span<const double> p_end) {
  const int t_len = static_cast<int>(p_start.size());
  for (Proposal& prop : proposals) {
    int s = std::clamp(static_cast<int>(std::lround(prop.start)), 0, t_len - 1);
    int e = std::clamp(static_cast<int>(std::lround(prop.end)), 0, t_len - 1);
    prop.score = p_start[static_cast<size_t>(s)] * p_end[static_cast<size_t>(e)];
  }
}

void refine_boundaries(std::vector<Proposal>& proposals, std::span<const double> offset_start,
                       std::span<const double> offset_end) {
  const int t_len = static_cast<int>(offset_start.size());
  const double limit = static_cast<double>(t_len);
  for (Proposal& prop : proposals) {
    int s_idx = std::clamp(static_cast<int>(std::lround(prop.start)), 0, t_len - 1);
    int e_idx = std::clamp(static_cast<int>(std::lround(prop.end)), 0, t_len - 1);
    double s = std::clamp(prop.start + offset_start[static_cast<size_t>(s_idx)], 0.0, limit);
    double e = std::clamp(prop.end + offset_end[static_cast<size_t>(e_idx)], 0.0, limit);
    if (s < e) {
      prop.start = s;
      prop.end = e;
    }
  }
}

std::vector<Proposal> soft_nms(std::vector<Proposal> proposals, const SoftNmsConfig& config) {
  if (config.sigma <= 0.0) throw ContractError("soft_nms sigma must be positive");
  std::sort(proposals.begin(), proposals.end(), canonical_before);
  std::vector<Proposal> selected;
  while (!proposals.empty() && static_cast<int>(selected.size()) < config.top_k) {
    size_t best = 0;
    for (size_t i = 1; i < proposals.size(); ++i)
      if (canonical_before(proposals[i], proposals[best])) best = i;
    Proposal pick = proposals[best];
    proposals.erase(proposals.begin() + static_cast<long>(best));
    selected.push_back(pick);
    std::vector<Proposal> rest;
    rest.reserve(proposals.size());
    for (Proposal& other : proposals) {
      double overlap = segment_tiou(pick.start, pick.end, other.start, other.end);
      if (config.linear) {
        if (overlap >= 0.3) other.score *= 1.0 - overlap;
      } else {
        other.score *= std::exp(-(overlap * overlap) / config.sigma);
      }
      if (other.score >= config.score_floor) rest.push_back(other);
    }
    proposals = std::move(rest);
  }
  return selected;
}

std::vector<Proposal> propose_window(std::span<const double> p_start,
                                     std::span<const double> p_end,
                                     std::span<const double> offset_start,
                                     std::span<const double> offset_end,
                                     const ProposalPipelineConfig& config) {
  std::vector<int> starts = select_candidates(p_start, config.rise_rule);
  std::vector<int> ends = select_candidates(p_end, config.rise_rule);
  std::vector<Proposal> proposals = generate_proposals(starts, ends, config.max_duration);
  if (config.refine && config.refine_before_scoring) {
    refine_boundaries(proposals, offset_start, offset_end);
    score_proposals(proposals, p_start, p_end);
  } else {
    score_proposals(proposals, p_start, p_end);
    if (config.refine) refine_boundaries(proposals, offset_start, offset_end);
  }
  return proposals;
}

std::vector<std::vector<double>> estimate_class_means(
    const std::vector<std::pair<const Tensor*, const AnnotationSet*>>& videos, int num_classes) {
  if (num_classes < 1) throw ContractError("estimate_class_means needs at least one class");
  std::vector<std::vector<double>> means;
  std::vector<long> counts(static_cast<size_t>(num_classes), 0);
  for (const auto& [features, annotations] : videos) {
    const int channels = features->shape().cols;
    if (means.empty())
      means.assign(static_cast<size_t>(num_classes),
                   std::vector<double>(static_cast<size_t>(channels), 0.0));
    for (const ActionInstance& inst : annotations->instances) {
      if (inst.class_id < 0 || inst.class_id >= num_classes)
        throw DataError("instance class " + std::to_string(inst.class_id) +
                        " outside [0, " + std::to_string(num_classes) + ")");
      auto& mean = means[static_cast<size_t>(inst.class_id)];
      for (int t = inst.start_frame; t <= inst.end_frame; ++t) {
        for (int c = 0; c < channels; ++c) mean[static_cast<size_t>(c)] += features->at(t, c);
        ++counts[static_cast<size_t>(inst.class_id)];
      }
    }
  }
  if (means.empty()) throw DataError("estimate_class_means got no videos");
  for (int a = 0; a < num_classes; ++a) {
    if (counts[static_cast<size_t>(a)] == 0) continue;  // unseen class keeps a zero mean
    for (double& v : means[static_cast<size_t>(a)]) v /= static_cast<double>(counts[static_cast<size_t>(a)]);
  }
  return means;
}

void classify_proposals(std::vector<Proposal>& proposals, const Tensor& features,
                        const std::vector<std::vector<double>>& class_means) {
  const int t_len = features.shape().rows;
  const int channels = features.shape().cols;
  std::vector<double> mean(static_cast<size_t>(channels));
  for (Proposal& prop : proposals) {
    int s = std::clamp(static_cast<int>(std::lround(prop.start)), 0, t_len - 1);
    int e = std::clamp(static_cast<int>(std::lround(prop.end)), 0, t_len - 1);
    if (e < s) e = s;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int t = s; t <= e; ++t)
      for (int c = 0; c < channels; ++c) mean[static_cast<size_t>(c)] += features.at(t, c);
    for (double& v : mean) v /= static_cast<double>(e - s + 1);
    int best_class = 0;
    double best_dist = 0.0;
    for (size_t a = 0; a < class_means.size(); ++a) {
      double dist = 0.0;
      for (int c = 0; c < channels; ++c) {
        double d = mean[static_cast<size_t>(c)] - class_means[a][static_cast<size_t>(c)];
        dist += d * d;
      }
      if (a == 0 || dist < best_dist) {
        best_dist = dist;
        best_class = static_cast<int>(a);
      }
    }
    prop.class_id = best_class;
  }
}

}  // namespace talkit
