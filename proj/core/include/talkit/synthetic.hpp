#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "talkit/labels.hpp"
#include "talkit/tensor.hpp"

namespace talkit {

// Deterministic corpus of feature sequences with non-overlapping annotated
// instances. Background frames are zero-mean Gaussian noise; instance frames
// add a class-specific mean vector of norm class_sep, with a 2-frame linear
// ramp at each boundary so that boundaries are learnable but not sharp.
struct SyntheticSpec {
  uint64_t seed = 0;
  int num_videos = 250;
  int frames_per_video = 128;
  int num_classes = 5;
  int channels = 8;
  int min_instances = 1;
  int max_instances = 4;
  int min_duration = 8;   // occupied frames, inclusive of both boundaries
  int max_duration = 40;
  double noise_sigma = 0.5;
  double class_sep = 2.0;

  void validate() const;
};

struct SyntheticVideo {
  std::string name;     // video_00000, ...
  uint64_t seed = 0;    // per-video stream seed derived from (spec.seed, index)
  Tensor features;      // (frames_per_video, channels)
  AnnotationSet annotations;
};

// The class mean vectors the generator uses: class a gets class_sep along
// feature axis a. Exposed so evaluations can reuse the exact means.
std::vector<std::vector<double>> synthetic_class_means(const SyntheticSpec& spec);

// One video; safe to call in parallel for distinct indices.
SyntheticVideo generate_video(const SyntheticSpec& spec, int index);

// The whole corpus, equal to calling generate_video for 0..num_videos-1.
std::vector<SyntheticVideo> generate(const SyntheticSpec& spec);

}  // namespace talkit
