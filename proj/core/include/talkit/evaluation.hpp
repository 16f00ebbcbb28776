#pragma once

#include <string>
#include <vector>

#include "talkit/inference.hpp"
#include "talkit/labels.hpp"

namespace talkit {

struct Segment {
  double start = 0.0;
  double end = 0.0;
};

// Temporal IoU of two real-line segments; 0 when disjoint. A zero-length
// segment overlaps nothing except an identical zero-length segment (IoU 1).
double tiou(const Segment& a, const Segment& b);

// Proposals and ground truth for one video, in evaluation order.
struct EvalVideo {
  std::string id;
  std::vector<Proposal> proposals;  // sorted by score descending
  std::vector<ActionInstance> gt;
};

inline std::vector<double> default_proposal_iou_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(0.5 + 0.05 * i);
  return g;
}

inline std::vector<double> default_map_average_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 9; ++i) g.push_back(0.5 + 0.05 * i);
  return g;
}

inline std::vector<double> default_map_iou_points() { return {0.3, 0.4, 0.5, 0.6, 0.7}; }

struct EvalConfig {
  std::vector<double> iou_grid_proposals = default_proposal_iou_grid();
  std::vector<double> iou_grid_map = default_map_average_grid();  // for the averaged mAP
  std::vector<int> an_values = {10, 50, 100, 200};
  std::vector<double> map_ious = default_map_iou_points();        // reported table points

  void validate() const;  // grids strictly increasing within (0, 1]
};

// Recall pooled over all ground-truth instances after truncating each video
// to its top-an proposals, averaged over the IoU grid. Throws DataError when
// there is no ground truth at all.
double average_recall(const std::vector<EvalVideo>& videos, int an,
                      const std::vector<double>& iou_grid);

// Trapezoidal area of AR as a function of AN, normalized by the AN span.
double ar_an_auc(const std::vector<EvalVideo>& videos, const std::vector<int>& an_values,
                 const std::vector<double>& iou_grid);

// Detection AP at one IoU threshold: detections are matched greedily in
// score order to the unmatched same-class ground truth with the highest
// overlap, and the precision/recall curve is integrated with the all-points
// precision envelope. The mean runs over classes present in the ground truth.
struct ApResult {
  std::vector<std::pair<int, double>> per_class;  // (class id, AP), class-sorted
  double map = 0.0;
};

ApResult mean_average_precision(const std::vector<EvalVideo>& videos, double iou_threshold);

// Oracle rescoring: every proposal's score becomes its best tIoU against the
// video's ground truth.
void oracle_rank(std::vector<EvalVideo>& videos);

// Oracle labels: every proposal takes the class of its best-overlap ground
// truth (ties to the earlier instance); zero-overlap proposals stay
// unlabeled and cannot match during AP.
void oracle_cls(std::vector<EvalVideo>& videos);

struct MetricsReport {
  long num_videos = 0;
  long num_gt = 0;
  std::vector<std::pair<int, double>> ar_at_an;        // (AN, AR)
  double auc = 0.0;
  std::vector<std::pair<double, double>> map_at_iou;   // (IoU, mAP) at the table points
  double average_map = 0.0;                            // mean mAP over iou_grid_map
};

MetricsReport compute_metrics(const std::vector<EvalVideo>& videos, const EvalConfig& config);

}  // namespace talkit
