#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "talkit/inference.hpp"
#include "talkit/labels.hpp"
#include "talkit/losses.hpp"
#include "talkit/tensor.hpp"

namespace talkit {

// Shortest round-trip decimal form of a double; shared by every text format
// so outputs are byte-stable.
std::string format_double(double value);

// ---- feature files -------------------------------------------------------
// Binary: magic "TKFT", u32 version, u32 frames, u32 channels, then
// frames*channels row-major little-endian float32.

void write_feature_file(const std::filesystem::path& path, const Tensor& features);
Tensor read_feature_file(const std::filesystem::path& path);

// ---- annotation files ----------------------------------------------------
// One JSON document per dataset: a class-name list plus per-video entries
// {name, num_frames, fps, split, instances:[{start_frame, end_frame,
// class_name}]}. Instance frames are inclusive. Schemas are described in the
// README's file-formats section.

struct VideoAnnotation {
  std::string name;
  int num_frames = 0;
  double fps = 25.0;
  std::string split = "train";
  std::vector<ActionInstance> instances;  // class_id indexes into classes

  AnnotationSet annotation_set() const { return {instances, num_frames}; }
};

struct DatasetAnnotations {
  std::vector<std::string> classes;
  std::vector<VideoAnnotation> videos;

  const VideoAnnotation* find(const std::string& name) const;
};

void write_annotations(const std::filesystem::path& path, const DatasetAnnotations& dataset);
DatasetAnnotations read_annotations(const std::filesystem::path& path);

// ---- proposal files ------------------------------------------------------
// Tab-separated text, one proposal per line, grouped by video and sorted by
// score descending within each video:
//   video_id <TAB> start <TAB> end <TAB> score <TAB> class
// class is "-" for unlabeled proposals. Lines starting with '#' are comments.

struct VideoProposals {
  std::string video_id;
  std::vector<Proposal> proposals;
};

void write_proposals(const std::filesystem::path& path, const std::vector<VideoProposals>& videos);
std::vector<VideoProposals> read_proposals(const std::filesystem::path& path);

// ---- corpus manifest -----------------------------------------------------

struct ManifestEntry {
  std::string name;
  std::string file;  // feature file, relative to the manifest directory
  std::string split;
  uint64_t seed = 0;
};

struct Manifest {
  uint64_t seed = 0;
  int num_train = 0;
  int num_test = 0;
  std::vector<ManifestEntry> videos;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// ---- training log --------------------------------------------------------
// One JSON object per line with the step, epoch, and all eleven loss scalars.

std::string loss_log_line(long step, int epoch, const LossReport& report);

}  // namespace talkit
