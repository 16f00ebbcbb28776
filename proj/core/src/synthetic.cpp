#include "talkit/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "talkit/errors.hpp"
#include "talkit/rng.hpp"

namespace talkit {

namespace {

// minimum empty frames between consecutive instances
constexpr int kInstanceGap = 2;
constexpr int kRampWidth = 2;

char digit(int v) { return static_cast<char>('0' + v); }

std::string video_name(int index) {
  std::string name = "video_00000";
  for (int pos = 10; pos >= 6 && index > 0; --pos) {
    name[static_cast<size_t>(pos)] = digit(index % 10);
    index /= 10;
  }
  return name;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_videos < 0) throw ConfigError("num_videos must be >= 0");
  if (frames_per_video < 2) throw ConfigError("frames_per_video must be >= 2");
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (num_classes > channels)
    throw ConfigError("num_classes must not exceed channels (class means are axis-aligned)");
  if (min_instances < 0 || max_instances < min_instances)
    throw ConfigError("instance count range is invalid");
  if (min_duration < 2 || max_duration < min_duration)
    throw ConfigError("duration range is invalid (need at least 2 frames)");
  if (max_duration > frames_per_video) throw ConfigError("durations must fit in a video");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (class_sep < 0.0) throw ConfigError("class_sep must be >= 0");
  // the packing below always succeeds if max_instances fit at min_duration
  long needed = static_cast<long>(max_instances) * min_duration +
                static_cast<long>(std::max(0, max_instances - 1)) * kInstanceGap;
  if (needed > frames_per_video)
    throw GenerationError("infeasible packing: " + std::to_string(max_instances) +
                          " instances of >= " + std::to_string(min_duration) +
                          " frames cannot fit in " + std::to_string(frames_per_video));
}

std::vector<std::vector<double>> synthetic_class_means(const SyntheticSpec& spec) {
  std::vector<std::vector<double>> means(static_cast<size_t>(spec.num_classes));
  for (int a = 0; a < spec.num_classes; ++a) {
    means[static_cast<size_t>(a)].assign(static_cast<size_t>(spec.channels), 0.0);
    means[static_cast<size_t>(a)][static_cast<size_t>(a)] = spec.class_sep;
  }
  return means;
}

SyntheticVideo generate_video(const SyntheticSpec& spec, int index) {
  spec.validate();
  SyntheticVideo video;
  video.name = video_name(index);
  video.seed = Rng::derive(spec.seed, static_cast<uint64_t>(index));
  Rng rng(video.seed);

  const int t_len = spec.frames_per_video;
  const int num_instances = static_cast<int>(rng.int_in(spec.min_instances, spec.max_instances));

  // durations first, capped so the remaining instances still fit at minimum
  // duration with gaps
  std::vector<int> durations(static_cast<size_t>(num_instances));
  int used = 0;
  for (int i = 0; i < num_instances; ++i) {
    int after = num_instances - 1 - i;
    int budget = t_len - used - after * (spec.min_duration + kInstanceGap) -
                 (i > 0 ? kInstanceGap : 0);
    int cap = std::min(spec.max_duration, budget);
    if (cap < spec.min_duration)
      throw GenerationError("infeasible packing in video " + video.name);
    durations[static_cast<size_t>(i)] = static_cast<int>(rng.int_in(spec.min_duration, cap));
    used += durations[static_cast<size_t>(i)] + (i > 0 ? kInstanceGap : 0);
  }

  // spread the leftover frames over the n+1 gaps via sorted random cuts
  int free_frames = t_len - used;
  std::vector<int> cuts(static_cast<size_t>(num_instances));
  for (int& c : cuts) c = static_cast<int>(rng.int_in(0, free_frames));
  std::sort(cuts.begin(), cuts.end());

  video.annotations.video_length = t_len;
  int cursor = 0;
  for (int i = 0; i < num_instances; ++i) {
    int extra = cuts[static_cast<size_t>(i)] - (i > 0 ? cuts[static_cast<size_t>(i - 1)] : 0);
    int start = cursor + extra + (i > 0 ? kInstanceGap : 0);
    int end = start + durations[static_cast<size_t>(i)] - 1;
    int class_id = static_cast<int>(rng.int_in(0, spec.num_classes - 1));
    video.annotations.instances.push_back({start, end, class_id});
    cursor = end + 1;
  }
  video.annotations.validate();

  auto means = synthetic_class_means(spec);
  video.features = Tensor(Shape::matrix(t_len, spec.channels));
  // per-frame class weight: 0 on background, ramping to 1 inside instances
  std::vector<double> weight(static_cast<size_t>(t_len), 0.0);
  std::vector<int> frame_class(static_cast<size_t>(t_len), -1);
  for (const ActionInstance& inst : video.annotations.instances) {
    for (int t = inst.start_frame; t <= inst.end_frame; ++t) {
      int into = std::min(t - inst.start_frame, inst.end_frame - t);
      double w = into >= kRampWidth ? 1.0 : static_cast<double>(into + 1) / (kRampWidth + 1);
      weight[static_cast<size_t>(t)] = w;
      frame_class[static_cast<size_t>(t)] = inst.class_id;
    }
  }
  for (int t = 0; t < t_len; ++t) {
    for (int c = 0; c < spec.channels; ++c) {
      double mean = 0.0;
      if (frame_class[static_cast<size_t>(t)] >= 0)
        mean = weight[static_cast<size_t>(t)] *
               means[static_cast<size_t>(frame_class[static_cast<size_t>(t)])]
                    [static_cast<size_t>(c)];
      video.features.at(t, c) = mean + rng.normal(0.0, spec.noise_sigma);
    }
  }
  return video;
}

std::vector<SyntheticVideo> generate(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticVideo> videos;
  videos.reserve(static_cast<size_t>(spec.num_videos));
  for (int i = 0; i < spec.num_videos; ++i) videos.push_back(generate_video(spec, i));
  return videos;
}

}  // namespace talkit
