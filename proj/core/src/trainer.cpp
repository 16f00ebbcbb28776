#include "talkit/trainer.hpp"

#include <cmath>
#include <thread>

#include "talkit/errors.hpp"
#include "talkit/rng.hpp"

namespace talkit {

namespace {

struct WindowResult {
  std::vector<Tensor> grads;  // one per parameter entry
  LossReport report;
};

WindowResult run_window(const NetworkConfig& net, const ModelParams& params,
                        const TrainWindow& window, const LossWeights& weights) {
  Graph g;
  std::vector<Value> leaves = add_param_leaves(g, params, true);
  Value features = g.constant(window.features);
  ForwardValues fv = forward(g, net, leaves, features);
  TotalLoss loss = total_loss(g, fv.p_continue, fv.p_start, fv.p_end, fv.offset_start,
                              fv.offset_end, window.labels, window.targets, weights);
  g.backward(loss.total);
  WindowResult result;
  result.report = loss.report;
  result.grads.reserve(leaves.size());
  for (Value leaf : leaves) result.grads.push_back(g.grad(leaf));
  return result;
}

void add_scaled(LossReport& into, const LossReport& from, double scale) {
  into.l_continue += scale * from.l_continue;
  into.l_start += scale * from.l_start;
  into.l_end += scale * from.l_end;
  into.l_cls += scale * from.l_cls;
  into.l_reg += scale * from.l_reg;
  into.l_intra_continue += scale * from.l_intra_continue;
  into.l_intra_start += scale * from.l_intra_start;
  into.l_intra_end += scale * from.l_intra_end;
  into.l_intra += scale * from.l_intra;
  into.l_inter += scale * from.l_inter;
  into.l_total += scale * from.l_total;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (lr_early < 0.0 || lr_late < 0.0) throw ConfigError("learning rates must be >= 0");
  if (switch_epoch < 0 || switch_epoch > epochs + start_epoch)
    throw ConfigError("switch_epoch must lie within the epoch range");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (double w : {weights.cls, weights.reg, weights.intra, weights.inter})
    if (w < 0.0 || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
}

SgdMomentum::SgdMomentum(int size, double momentum)
    : velocity_(static_cast<size_t>(size), 0.0), momentum_(momentum) {}

void SgdMomentum::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != velocity_.size() || grads.size() != velocity_.size())
    throw ContractError("optimizer state size mismatch");
  for (size_t i = 0; i < velocity_.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] - lr * grads[i];
    params[i] += velocity_[i];
  }
}

TrainWindow make_train_window(const Tensor& features, const AnnotationSet& annotations) {
  const int t_len = features.shape().rows;
  TrainWindow window;
  window.features = features;
  window.labels = make_phase_labels(annotations, t_len);
  window.targets = make_offset_targets(annotations, t_len);
  return window;
}

std::vector<TrainWindow> build_train_windows(const Tensor& features,
                                             const AnnotationSet& annotations,
                                             int window_length) {
  std::vector<TrainWindow> windows;
  for (const VideoWindow& piece : window_video(features, annotations, window_length))
    windows.push_back(make_train_window(piece.features, piece.annotations));
  return windows;
}

TrainResult train(const NetworkConfig& net, ModelParams params,
                  const std::vector<TrainWindow>& windows, const TrainConfig& config,
                  const StepCallback& on_step, const EpochCallback& on_epoch) {
  net.validate();
  config.validate();
  if (windows.empty()) throw DataError("training needs at least one window");
  for (const TrainWindow& w : windows)
    if (w.features.shape().rows != net.window_length ||
        w.features.shape().cols != net.input_channels)
      throw ShapeError("window features " + to_string(w.features.shape()) +
                       " do not match the network configuration");

  std::vector<SgdMomentum> optimizers;
  optimizers.reserve(params.entries.size());
  for (const ModelParams::Entry& e : params.entries)
    optimizers.emplace_back(e.tensor.size(), config.momentum);

  Rng shuffle_rng(Rng::derive(config.seed, 0x0ddba11));
  std::vector<int> order(windows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  long step = 0;
  for (int epoch_index = 0; epoch_index < config.epochs; ++epoch_index) {
    const int epoch = config.start_epoch + epoch_index;
    const double lr = epoch < config.switch_epoch ? config.lr_early : config.lr_late;
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.int_in(0, static_cast<int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    LossReport epoch_sum;
    for (size_t batch_begin = 0; batch_begin < order.size();
         batch_begin += static_cast<size_t>(config.batch_size)) {
      const size_t batch_end =
          std::min(order.size(), batch_begin + static_cast<size_t>(config.batch_size));
      const int batch_count = static_cast<int>(batch_end - batch_begin);

      // per-window results land in slots; the reduction below walks them in
      // window order so the thread count never changes the result
      std::vector<WindowResult> slots(static_cast<size_t>(batch_count));
      const int worker_count = std::min(config.threads, batch_count);
      if (worker_count <= 1) {
        for (int k = 0; k < batch_count; ++k)
          slots[static_cast<size_t>(k)] = run_window(
              net, params, windows[static_cast<size_t>(order[batch_begin + static_cast<size_t>(k)])],
              config.weights);
      } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(worker_count));
        for (int w = 0; w < worker_count; ++w) {
          workers.emplace_back([&, w]() {
            for (int k = w; k < batch_count; k += worker_count)
              slots[static_cast<size_t>(k)] = run_window(
                  net, params,
                  windows[static_cast<size_t>(order[batch_begin + static_cast<size_t>(k)])],
                  config.weights);
          });
        }
        for (std::thread& t : workers) t.join();
      }

      std::vector<Tensor> grads;
      grads.reserve(params.entries.size());
      for (const ModelParams::Entry& e : params.entries) grads.emplace_back(e.tensor.shape());
      LossReport batch_report;
      const double inv = 1.0 / batch_count;
      for (int k = 0; k < batch_count; ++k) {
        const WindowResult& r = slots[static_cast<size_t>(k)];
        for (size_t e = 0; e < grads.size(); ++e) {
          double* acc = grads[e].data();
          const double* src = r.grads[e].data();
          for (int i = 0; i < grads[e].size(); ++i) acc[i] += inv * src[i];
        }
        add_scaled(batch_report, r.report, inv);
      }

      ++step;
      if (const char* bad = batch_report.first_non_finite())
        throw NumericError("non-finite loss component '" + std::string(bad) + "' at step " +
                           std::to_string(step) + " (epoch " + std::to_string(epoch) + ")");

      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const Tensor& g : grads)
          for (int i = 0; i < g.size(); ++i) sq += g.at(i) * g.at(i);
        double norm = std::sqrt(sq);
        if (norm > config.clip_norm) {
          double scale = config.clip_norm / norm;
          for (Tensor& g : grads)
            for (int i = 0; i < g.size(); ++i) g.at(i) *= scale;
        }
      }

      for (size_t e = 0; e < params.entries.size(); ++e) {
        Tensor& p = params.entries[e].tensor;
        optimizers[e].step(std::span<double>(p.data(), static_cast<size_t>(p.size())),
                           std::span<const double>(grads[e].data(),
                                                   static_cast<size_t>(grads[e].size())),
                           lr);
      }
      if (on_step) on_step(step, epoch, batch_report);
      add_scaled(epoch_sum, batch_report, static_cast<double>(batch_count));
    }
    LossReport epoch_mean;
    add_scaled(epoch_mean, epoch_sum, 1.0 / static_cast<double>(windows.size()));
    result.epoch_means.push_back(epoch_mean);
    if (on_epoch) on_epoch(epoch, params, epoch_mean);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace talkit
