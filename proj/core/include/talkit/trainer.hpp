#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "talkit/labels.hpp"
#include "talkit/losses.hpp"
#include "talkit/model.hpp"

namespace talkit {

struct TrainConfig {
  int epochs = 20;
  double lr_early = 1e-3;
  double lr_late = 1e-4;
  int switch_epoch = 10;  // epochs at or after this index use lr_late
  double momentum = 0.9;
  int batch_size = 8;
  uint64_t seed = 0;
  LossWeights weights;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  int threads = 1;
  int start_epoch = 0;  // set when resuming from a checkpoint

  void validate() const;
};

// SGD with momentum: v <- momentum * v - lr * grad; param <- param + v.
class SgdMomentum {
 public:
  SgdMomentum(int size, double momentum);
  void step(std::span<double> params, std::span<const double> grads, double lr);

 private:
  std::vector<double> velocity_;
  double momentum_;
};

// One fixed-length training example.
struct TrainWindow {
  Tensor features;
  PhaseLabels labels;
  OffsetTargets targets;
};

TrainWindow make_train_window(const Tensor& features, const AnnotationSet& annotations);

// Windows a whole video and derives labels/targets for each piece.
std::vector<TrainWindow> build_train_windows(const Tensor& features,
                                             const AnnotationSet& annotations, int window_length);

struct TrainResult {
  ModelParams params;
  std::vector<LossReport> epoch_means;  // one entry per trained epoch
};

using StepCallback = std::function<void(long step, int epoch, const LossReport&)>;
using EpochCallback = std::function<void(int epoch, const ModelParams&, const LossReport&)>;

// Deterministic mini-batch training: the window order is reshuffled each
// epoch from config.seed, batch gradients are the mean over the batch, and
// per-window work may run on config.threads threads with gradients reduced
// in window order so the result does not depend on the thread count.
// Throws NumericError naming the first non-finite loss component.
TrainResult train(const NetworkConfig& net, ModelParams params,
                  const std::vector<TrainWindow>& windows, const TrainConfig& config,
                  const StepCallback& on_step = nullptr,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace talkit
