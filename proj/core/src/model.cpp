#include "talkit/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "talkit/errors.hpp"
#include "talkit/rng.hpp"

namespace talkit {

namespace {

struct ConvSpec {
  std::string name;
  int kernel;
  int c_in;
  int c_out;
};

std::vector<ConvSpec> conv_layout(const NetworkConfig& c) {
  std::vector<ConvSpec> layout;
  for (int l = 0; l < c.base_layers; ++l) {
    int in = l == 0 ? c.input_channels : c.base_channels;
    layout.push_back({"base.conv" + std::to_string(l), c.base_kernel, in, c.base_channels});
  }
  for (const char* head : {"prob_continue", "prob_start", "prob_end", "regr_start", "regr_end"}) {
    layout.push_back({std::string(head) + ".conv0", c.head_kernel, c.base_channels,
                      c.head_channels});
    layout.push_back({std::string(head) + ".conv1", c.head_kernel, c.head_channels, 1});
  }
  return layout;
}

constexpr char kCheckpointMagic[4] = {'T', 'K', 'C', 'P'};
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in, const char* what) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

}  // namespace

void NetworkConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(input_channels, "input_channels");
  positive(base_channels, "base_channels");
  positive(head_channels, "head_channels");
  positive(base_layers, "base_layers");
  positive(window_length, "window_length");
  for (auto [k, name] : {std::pair{base_kernel, "base_kernel"}, {head_kernel, "head_kernel"}}) {
    if (k < 1 || k % 2 == 0)
      throw ConfigError(std::string(name) + " must be odd and positive, got " + std::to_string(k));
  }
}

int ModelParams::total_size() const {
  int total = 0;
  for (const Entry& e : entries) total += e.tensor.size();
  return total;
}

bool ModelParams::same_values(const ModelParams& other) const {
  if (entries.size() != other.entries.size()) return false;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != other.entries[i].name) return false;
    if (!entries[i].tensor.same_values(other.entries[i].tensor)) return false;
  }
  return true;
}

int param_count(const NetworkConfig& config) {
  config.validate();
  int total = 0;
  for (const ConvSpec& conv : conv_layout(config))
    total += conv.kernel * conv.c_in * conv.c_out + conv.c_out;
  return total;
}

ModelParams init_params(const NetworkConfig& config, uint64_t seed) {
  config.validate();
  ModelParams params;
  int stream = 0;
  for (const ConvSpec& conv : conv_layout(config)) {
    Rng rng(Rng::derive(seed, static_cast<uint64_t>(stream++)));
    double fan_in = static_cast<double>(conv.kernel) * conv.c_in;
    double fan_out = static_cast<double>(conv.kernel) * conv.c_out;
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor weight(Shape::matrix(conv.kernel * conv.c_in, conv.c_out));
    for (int i = 0; i < weight.size(); ++i) weight.at(i) = rng.uniform(-bound, bound);
    params.entries.push_back({conv.name + ".weight", std::move(weight)});
    params.entries.push_back({conv.name + ".bias", Tensor(Shape::vector(conv.c_out))});
  }
  return params;
}

std::vector<Value> add_param_leaves(Graph& g, const ModelParams& params, bool requires_grad) {
  std::vector<Value> leaves;
  leaves.reserve(params.entries.size());
  for (const ModelParams::Entry& e : params.entries) {
    Tensor t = e.tensor;
    t.set_requires_grad(requires_grad);
    leaves.push_back(g.leaf(std::move(t)));
  }
  return leaves;
}

ForwardValues forward(Graph& g, const NetworkConfig& config,
                      const std::vector<Value>& param_leaves, Value features) {
  config.validate();
  const Tensor& f = g.value(features);
  if (f.shape().rank != 2 || f.shape().cols != config.input_channels)
    throw ShapeError("features " + to_string(f.shape()) + " do not match input_channels " +
                     std::to_string(config.input_channels));
  if (param_leaves.size() != static_cast<size_t>(2 * (config.base_layers + 10)))
    throw ContractError("parameter leaf count does not match the configuration");

  size_t next = 0;
  auto conv = [&](Value x, int kernel) {
    Value w = param_leaves[next++];
    Value b = param_leaves[next++];
    return g.conv1d(x, w, b, kernel);
  };

  Value trunk = features;
  for (int l = 0; l < config.base_layers; ++l) trunk = g.relu(conv(trunk, config.base_kernel));

  auto prob_head = [&]() {
    Value h = g.relu(conv(trunk, config.head_kernel));
    return g.flatten(g.sigmoid(conv(h, config.head_kernel)));
  };
  auto regr_head = [&]() {
    Value h = g.relu(conv(trunk, config.head_kernel));
    return g.flatten(conv(h, config.head_kernel));
  };

  ForwardValues out;
  out.p_continue = prob_head();
  out.p_start = prob_head();
  out.p_end = prob_head();
  out.offset_start = regr_head();
  out.offset_end = regr_head();
  return out;
}

ModelOutputs run_forward(const NetworkConfig& config, const ModelParams& params,
                         const Tensor& features) {
  Graph g;
  std::vector<Value> leaves = add_param_leaves(g, params, false);
  Value f = g.constant(features);
  ForwardValues values = forward(g, config, leaves, f);
  ModelOutputs out;
  out.p_continue = g.value(values.p_continue).values();
  out.p_start = g.value(values.p_start).values();
  out.p_end = g.value(values.p_end).values();
  out.offset_start = g.value(values.offset_start).values();
  out.offset_end = g.value(values.offset_end).values();
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(out, kCheckpointVersion);
  const NetworkConfig& c = checkpoint.config;
  for (int field : {c.input_channels, c.base_channels, c.head_channels, c.base_kernel,
                    c.head_kernel, c.base_layers, c.window_length})
    write_u32(out, static_cast<uint32_t>(field));
  write_u32(out, static_cast<uint32_t>(checkpoint.epoch));
  write_u32(out, static_cast<uint32_t>(checkpoint.params.entries.size()));
  for (const ModelParams::Entry& e : checkpoint.params.entries) {
    write_u32(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u32(out, static_cast<uint32_t>(e.tensor.shape().rank));
    write_u32(out, static_cast<uint32_t>(e.tensor.shape().rows));
    write_u32(out, static_cast<uint32_t>(e.tensor.shape().cols));
    out.write(reinterpret_cast<const char*>(e.tensor.data()),
              static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
  }
  if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  uint32_t version = read_u32(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint checkpoint;
  NetworkConfig& c = checkpoint.config;
  for (int* field : {&c.input_channels, &c.base_channels, &c.head_channels, &c.base_kernel,
                     &c.head_kernel, &c.base_layers, &c.window_length})
    *field = static_cast<int>(read_u32(in, "config"));
  checkpoint.epoch = static_cast<int>(read_u32(in, "epoch"));
  uint32_t count = read_u32(in, "parameter count");
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(in, "parameter name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("checkpoint truncated in parameter name");
    uint32_t rank = read_u32(in, "shape rank");
    uint32_t rows = read_u32(in, "shape rows");
    uint32_t cols = read_u32(in, "shape cols");
    if (rank != 1 && rank != 2) throw FormatError("checkpoint has invalid tensor rank");
    Shape shape{static_cast<int>(rank), static_cast<int>(rows), static_cast<int>(cols)};
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw FormatError("checkpoint truncated in parameter data");
    checkpoint.params.entries.push_back({std::move(name), std::move(t)});
  }
  checkpoint.config.validate();
  return checkpoint;
}

}  // namespace talkit
