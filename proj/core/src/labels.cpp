#include "talkit/labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

struct FrameRange {
  int lo;
  int hi;  // inclusive; empty when lo > hi
};

FrameRange boundary_region(double boundary, double delta, int window_length) {
  int lo = std::max(0, round_half_up(boundary - delta));
  int hi = std::min(window_length - 1, round_half_up(boundary + delta));
  return {lo, hi};
}

}  // namespace

void AnnotationSet::validate() const {
  for (const ActionInstance& inst : instances) {
    if (!(0 <= inst.start_frame && inst.start_frame < inst.end_frame &&
          inst.end_frame < video_length))
      throw DataError("invalid instance (" + std::to_string(inst.start_frame) + ", " +
                      std::to_string(inst.end_frame) + ") for video of " +
                      std::to_string(video_length) + " frames");
  }
}

double boundary_delta(const ActionInstance& inst) {
  return 0.1 * (inst.end_frame - inst.start_frame);
}

PhaseLabels make_phase_labels(const AnnotationSet& annotations, int window_length) {
  if (window_length < 1) throw ContractError("window length must be >= 1");
  PhaseLabels labels;
  labels.continuing.assign(static_cast<size_t>(window_length), 0);
  labels.starting.assign(static_cast<size_t>(window_length), 0);
  labels.ending.assign(static_cast<size_t>(window_length), 0);
  for (const ActionInstance& inst : annotations.instances) {
    if (inst.end_frame < 0 || inst.start_frame > window_length - 1) continue;
    double delta = boundary_delta(inst);
    int c_lo = std::max(0, inst.start_frame);
    int c_hi = std::min(window_length - 1, inst.end_frame);
    for (int t = c_lo; t <= c_hi; ++t) labels.continuing[static_cast<size_t>(t)] = 1;
    FrameRange s = boundary_region(inst.start_frame, delta, window_length);
    for (int t = s.lo; t <= s.hi; ++t) labels.starting[static_cast<size_t>(t)] = 1;
    FrameRange e = boundary_region(inst.end_frame, delta, window_length);
    for (int t = e.lo; t <= e.hi; ++t) labels.ending[static_cast<size_t>(t)] = 1;
  }
  return labels;
}

OffsetTargets make_offset_targets(const AnnotationSet& annotations, int window_length) {
  if (window_length < 1) throw ContractError("window length must be >= 1");
  OffsetTargets targets;
  targets.start_offset.assign(static_cast<size_t>(window_length), 0.0);
  targets.end_offset.assign(static_cast<size_t>(window_length), 0.0);
  targets.start_mask.assign(static_cast<size_t>(window_length), 0);
  targets.end_mask.assign(static_cast<size_t>(window_length), 0);
  // distance of the currently assigned boundary per frame
  std::vector<double> start_dist(static_cast<size_t>(window_length), 0.0);
  std::vector<double> end_dist(static_cast<size_t>(window_length), 0.0);

  auto assign = [&](int boundary, double delta, std::vector<double>& offset,
                    std::vector<uint8_t>& mask, std::vector<double>& dist) {
    FrameRange r = boundary_region(boundary, delta, window_length);
    for (int t = r.lo; t <= r.hi; ++t) {
      size_t i = static_cast<size_t>(t);
      double d = std::fabs(static_cast<double>(boundary) - t);
      if (mask[i] && dist[i] <= d) continue;  // keep nearer (or earlier on tie)
      mask[i] = 1;
      dist[i] = d;
      offset[i] = static_cast<double>(boundary) - t;
    }
  };

  for (const ActionInstance& inst : annotations.instances) {
    if (inst.end_frame < 0 || inst.start_frame > window_length - 1) continue;
    double delta = boundary_delta(inst);
    assign(inst.start_frame, delta, targets.start_offset, targets.start_mask, start_dist);
    assign(inst.end_frame, delta, targets.end_offset, targets.end_mask, end_dist);
  }
  return targets;
}

std::vector<VideoWindow> window_video(const Tensor& features, const AnnotationSet& annotations,
                                      int window_length) {
  if (window_length < 1) throw ContractError("window length must be >= 1");
  if (features.shape().rank != 2) throw ShapeError("features must be rank-2 (T, C)");
  const int video_len = features.shape().rows;
  const int channels = features.shape().cols;
  if (annotations.video_length != video_len)
    throw DataError("annotation video_length " + std::to_string(annotations.video_length) +
                    " does not match feature length " + std::to_string(video_len));
  annotations.validate();

  const int num_windows = std::max(1, (video_len + window_length - 1) / window_length);
  std::vector<VideoWindow> windows;
  windows.reserve(static_cast<size_t>(num_windows));
  for (int w = 0; w < num_windows; ++w) {
    const int begin = w * window_length;
    VideoWindow win;
    win.offset = begin;
    win.features = Tensor(Shape::matrix(window_length, channels));
    const int copy_len = std::min(window_length, video_len - begin);
    for (int t = 0; t < copy_len; ++t)
      for (int c = 0; c < channels; ++c) win.features.at(t, c) = features.at(begin + t, c);

    win.annotations.video_length = window_length;
    for (const ActionInstance& inst : annotations.instances) {
      int s = inst.start_frame - begin;
      int e = inst.end_frame - begin;
      int cs = std::max(0, s);
      int ce = std::min(window_length - 1, e);
      if (cs >= ce) continue;  // outside the window or degenerate after clipping
      int original_span = inst.end_frame - inst.start_frame + 1;
      int retained_span = ce - cs + 1;
      if (2 * retained_span < original_span) continue;
      win.annotations.instances.push_back({cs, ce, inst.class_id});
    }
    windows.push_back(std::move(win));
  }
  return windows;
}

}  // namespace talkit
