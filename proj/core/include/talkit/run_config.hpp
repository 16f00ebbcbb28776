#pragma once

#include <filesystem>

#include "talkit/evaluation.hpp"
#include "talkit/model.hpp"
#include "talkit/synthetic.hpp"
#include "talkit/trainer.hpp"

namespace talkit {

// Inference-time knobs shared by the CLI and the proposal pipeline.
struct InferenceSettings {
  double nms_sigma = 0.5;
  double score_floor = 1e-3;
  int top_k = 200;
  bool linear_nms = false;
  bool rise_rule = false;
  bool refine = true;
  bool refine_before_scoring = false;
  int max_duration = 0;  // 0 = use the longest training-split instance
  bool classify = true;

  void validate() const;
};

struct CorpusSplit {
  int num_train = 200;
  int num_test = 50;
};

// Everything one experiment needs, loadable from a single JSON file
// (// comments allowed) with unknown keys rejected. See config/example.json.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  SyntheticSpec synthetic;  // num_videos kept equal to num_train + num_test
  CorpusSplit split;
  EvalConfig eval;
  InferenceSettings inference;

  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace talkit
