#include "talkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

// deterministic total order: score desc, then boundaries, then class
bool detection_before(const Proposal& a, const Proposal& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.start != b.start) return a.start < b.start;
  if (a.end != b.end) return a.end < b.end;
  return a.class_id < b.class_id;
}

std::vector<Proposal> top_an(const EvalVideo& video, int an) {
  std::vector<Proposal> sorted = video.proposals;
  std::stable_sort(sorted.begin(), sorted.end(), detection_before);
  if (static_cast<int>(sorted.size()) > an) sorted.resize(static_cast<size_t>(an));
  return sorted;
}

Segment to_segment(const ActionInstance& inst) {
  return {static_cast<double>(inst.start_frame), static_cast<double>(inst.end_frame)};
}

long total_gt(const std::vector<EvalVideo>& videos) {
  long count = 0;
  for (const EvalVideo& v : videos) count += static_cast<long>(v.gt.size());
  return count;
}

}  // namespace

double tiou(const Segment& a, const Segment& b) {
  double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
  double uni = (a.end - a.start) + (b.end - b.start) - inter;
  if (uni <= 0.0) return a.start == b.start && a.end == b.end ? 1.0 : 0.0;
  return inter > 0.0 ? inter / uni : 0.0;
}

void EvalConfig::validate() const {
  auto check_grid = [](const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw ConfigError(std::string(name) + " must not be empty");
    double prev = 0.0;
    for (double v : grid) {
      if (v <= prev || v > 1.0)
        throw ConfigError(std::string(name) + " must be strictly increasing within (0, 1]");
      prev = v;
    }
  };
  check_grid(iou_grid_proposals, "iou_grid_proposals");
  check_grid(iou_grid_map, "iou_grid_map");
  check_grid(map_ious, "map_ious");
  if (an_values.empty()) throw ConfigError("an_values must not be empty");
  int prev = 0;
  for (int an : an_values) {
    if (an <= prev) throw ConfigError("an_values must be strictly increasing positives");
    prev = an;
  }
}

double average_recall(const std::vector<EvalVideo>& videos, int an,
                      const std::vector<double>& iou_grid) {
  const long gt_count = total_gt(videos);
  if (gt_count == 0) throw DataError("average recall is undefined without ground truth");

  // best overlap per ground-truth instance against the retained proposals
  std::vector<double> best;
  best.reserve(static_cast<size_t>(gt_count));
  for (const EvalVideo& video : videos) {
    std::vector<Proposal> retained = top_an(video, an);
    for (const ActionInstance& inst : video.gt) {
      Segment g = to_segment(inst);
      double overlap = 0.0;
      for (const Proposal& prop : retained)
        overlap = std::max(overlap, tiou({prop.start, prop.end}, g));
      best.push_back(overlap);
    }
  }
  double recall_sum = 0.0;
  for (double threshold : iou_grid) {
    long matched = 0;
    for (double overlap : best)
      if (overlap >= threshold) ++matched;
    recall_sum += static_cast<double>(matched) / static_cast<double>(gt_count);
  }
  return recall_sum / static_cast<double>(iou_grid.size());
}

double ar_an_auc(const std::vector<EvalVideo>& videos, const std::vector<int>& an_values,
                 const std::vector<double>& iou_grid) {
  if (an_values.empty()) throw ContractError("ar_an_auc needs at least one AN value");
  std::vector<double> ar;
  ar.reserve(an_values.size());
  for (int an : an_values) ar.push_back(average_recall(videos, an, iou_grid));
  if (an_values.size() == 1) return ar[0];
  double area = 0.0;
  for (size_t i = 0; i + 1 < an_values.size(); ++i)
    area += 0.5 * (ar[i] + ar[i + 1]) * (an_values[i + 1] - an_values[i]);
  return area / static_cast<double>(an_values.back() - an_values.front());
}

ApResult mean_average_precision(const std::vector<EvalVideo>& videos, double iou_threshold) {
  // classes present in ground truth define the mean
  std::set<int> classes;
  std::map<int, long> gt_per_class;
  for (const EvalVideo& video : videos) {
    for (const ActionInstance& inst : video.gt) {
      classes.insert(inst.class_id);
      ++gt_per_class[inst.class_id];
    }
  }
  if (classes.empty()) throw DataError("mean average precision is undefined without ground truth");

  struct Detection {
    double score;
    double start;
    double end;
    int video;
  };

  ApResult result;
  double ap_sum = 0.0;
  for (int class_id : classes) {
    std::vector<Detection> detections;
    for (size_t vi = 0; vi < videos.size(); ++vi) {
      for (const Proposal& prop : videos[vi].proposals)
        if (prop.class_id == class_id)
          detections.push_back({prop.score, prop.start, prop.end, static_cast<int>(vi)});
    }
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection& a, const Detection& b) {
                       if (a.score != b.score) return a.score > b.score;
                       if (a.video != b.video) return a.video < b.video;
                       if (a.start != b.start) return a.start < b.start;
                       return a.end < b.end;
                     });

    // per-video list of unmatched gt of this class
    std::vector<std::vector<std::pair<Segment, bool>>> gt_state(videos.size());
    for (size_t vi = 0; vi < videos.size(); ++vi)
      for (const ActionInstance& inst : videos[vi].gt)
        if (inst.class_id == class_id) gt_state[vi].push_back({to_segment(inst), false});

    const long class_gt = gt_per_class[class_id];
    std::vector<uint8_t> is_tp(detections.size(), 0);
    for (size_t di = 0; di < detections.size(); ++di) {
      const Detection& det = detections[di];
      auto& gts = gt_state[static_cast<size_t>(det.video)];
      int best = -1;
      double best_overlap = 0.0;
      for (size_t gi = 0; gi < gts.size(); ++gi) {
        if (gts[gi].second) continue;
        double overlap = tiou({det.start, det.end}, gts[gi].first);
        if (overlap >= iou_threshold && overlap > best_overlap) {
          best_overlap = overlap;
          best = static_cast<int>(gi);
        }
      }
      if (best >= 0) {
        gts[static_cast<size_t>(best)].second = true;
        is_tp[di] = 1;
      }
    }

    // all-points interpolation: integrate recall against the precision envelope
    double ap = 0.0;
    if (class_gt > 0 && !detections.empty()) {
      std::vector<double> precision(detections.size()), recall(detections.size());
      long tp = 0;
      for (size_t i = 0; i < detections.size(); ++i) {
        tp += is_tp[i];
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(class_gt);
      }
      for (size_t i = detections.size() - 1; i > 0; --i)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
      double prev_recall = 0.0;
      for (size_t i = 0; i < detections.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
      }
    }
    result.per_class.push_back({class_id, ap});
    ap_sum += ap;
  }
  result.map = ap_sum / static_cast<double>(classes.size());
  return result;
}

void oracle_rank(std::vector<EvalVideo>& videos) {
  for (EvalVideo& video : videos) {
    for (Proposal& prop : video.proposals) {
      double best = 0.0;
      for (const ActionInstance& inst : video.gt)
        best = std::max(best, tiou({prop.start, prop.end}, to_segment(inst)));
      prop.score = best;
    }
  }
}

void oracle_cls(std::vector<EvalVideo>& videos) {
  for (EvalVideo& video : videos) {
    // earlier instance wins ties: scan in (start, end) order
    std::vector<ActionInstance> ordered = video.gt;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ActionInstance& a, const ActionInstance& b) {
                       if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
                       return a.end_frame < b.end_frame;
                     });
    for (Proposal& prop : video.proposals) {
      int best_class = -1;
      double best_overlap = 0.0;
      for (const ActionInstance& inst : ordered) {
        double overlap = tiou({prop.start, prop.end}, to_segment(inst));
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best_class = inst.class_id;
        }
      }
      prop.class_id = best_overlap > 0.0 ? best_class : -1;
    }
  }
}

MetricsReport compute_metrics(const std::vector<EvalVideo>& videos, const EvalConfig& config) {
  config.validate();
  MetricsReport report;
  report.num_videos = static_cast<long>(videos.size());
  report.num_gt = total_gt(videos);
  for (int an : config.an_values)
    report.ar_at_an.push_back({an, average_recall(videos, an, config.iou_grid_proposals)});
  report.auc = ar_an_auc(videos, config.an_values, config.iou_grid_proposals);
  for (double iou : config.map_ious)
    report.map_at_iou.push_back({iou, mean_average_precision(videos, iou).map});
  double map_sum = 0.0;
  for (double iou : config.iou_grid_map) map_sum += mean_average_precision(videos, iou).map;
  report.average_map = map_sum / static_cast<double>(config.iou_grid_map.size());
  return report;
}

}  // namespace talkit
