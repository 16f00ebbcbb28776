#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "talkit/graph.hpp"
#include "talkit/tensor.hpp"

namespace talkit {

// Shared trunk of stacked 1-D convolutions feeding three probability heads
// (continuing, starting, ending; sigmoid output) and two offset heads
// (starting, ending; identity output). Every head is two convolutions with a
// ReLU between them. Convolutions are same-length with odd kernels.
struct NetworkConfig {
  int input_channels = 8;
  int base_channels = 32;
  int head_channels = 16;
  int base_kernel = 9;
  int head_kernel = 5;
  int base_layers = 2;
  int window_length = 128;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Named parameter tensors in a fixed order: base convolutions first, then the
// prob heads (continue, start, end), then the offset heads (start, end), each
// as weight/bias pairs.
struct ModelParams {
  struct Entry {
    std::string name;
    Tensor tensor;
  };
  std::vector<Entry> entries;

  int total_size() const;
  bool same_values(const ModelParams& other) const;
};

// Number of scalars a given configuration trains.
int param_count(const NetworkConfig& config);

// Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), where fans
// count the full receptive field (kernel * channels). Biases start at zero.
// Deterministic in (config, seed).
ModelParams init_params(const NetworkConfig& config, uint64_t seed);

struct ForwardValues {
  Value p_continue;
  Value p_start;
  Value p_end;
  Value offset_start;
  Value offset_end;
};

// Adds every parameter as a graph leaf, in entry order.
std::vector<Value> add_param_leaves(Graph& g, const ModelParams& params, bool requires_grad);

// Builds the forward pass on an existing graph. features must be rank-2
// (T, input_channels); param_leaves comes from add_param_leaves. All five
// outputs are rank-1 of length T.
ForwardValues forward(Graph& g, const NetworkConfig& config,
                      const std::vector<Value>& param_leaves, Value features);

// Plain-tensor forward for inference.
struct ModelOutputs {
  std::vector<double> p_continue;
  std::vector<double> p_start;
  std::vector<double> p_end;
  std::vector<double> offset_start;
  std::vector<double> offset_end;
};

ModelOutputs run_forward(const NetworkConfig& config, const ModelParams& params,
                         const Tensor& features);

// Self-describing binary checkpoint: magic, format version, config, epoch,
// then each named parameter with its shape and row-major little-endian
// 64-bit values.
struct Checkpoint {
  NetworkConfig config;
  int epoch = 0;
  ModelParams params;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace talkit
