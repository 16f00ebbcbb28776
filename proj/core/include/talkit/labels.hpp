#pragma once

#include <cstdint>
#include <vector>

#include "talkit/tensor.hpp"

namespace talkit {

// One annotated action: frames [start_frame, end_frame], both inclusive.
struct ActionInstance {
  int start_frame = 0;
  int end_frame = 0;
  int class_id = 0;
};

struct AnnotationSet {
  std::vector<ActionInstance> instances;
  int video_length = 0;

  void validate() const;  // 0 <= start < end < video_length for every instance
};

// Per-frame binary ground truth for the continuing / starting / ending phases.
struct PhaseLabels {
  std::vector<uint8_t> continuing;
  std::vector<uint8_t> starting;
  std::vector<uint8_t> ending;
};

// Boundary-offset regression targets in frame units. Offsets are only
// meaningful where the matching mask is 1; masks equal the starting/ending
// phase labels.
struct OffsetTargets {
  std::vector<double> start_offset;
  std::vector<double> end_offset;
  std::vector<uint8_t> start_mask;
  std::vector<uint8_t> end_mask;
};

// Half-width of the boundary regions: 0.1 of the instance duration.
double boundary_delta(const ActionInstance& inst);

// Continuing is 1 on [start, end]; starting/ending are 1 on the closed
// regions [boundary - delta, boundary + delta], rounded half-up and clipped
// to the window. Regions from multiple instances are unioned.
PhaseLabels make_phase_labels(const AnnotationSet& annotations, int window_length);

// offset = boundary - frame, inside the same rounded regions as the phase
// labels. Where regions overlap, the nearest boundary wins (ties go to the
// earlier instance).
OffsetTargets make_offset_targets(const AnnotationSet& annotations, int window_length);

// One fixed-length view into a video: features zero-padded to window_length,
// annotations shifted into window coordinates. offset is the window start
// frame in the original video.
struct VideoWindow {
  Tensor features;
  AnnotationSet annotations;
  int offset = 0;
};

// Non-overlapping windows covering the video; the last one is zero-padded.
// Instances are clipped into each window and dropped when the retained frame
// count falls below half of the original.
std::vector<VideoWindow> window_video(const Tensor& features, const AnnotationSet& annotations,
                                      int window_length);

}  // namespace talkit
