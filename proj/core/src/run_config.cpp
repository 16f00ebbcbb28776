#include "talkit/run_config.hpp"

#include <fstream>

#include <json.hpp>

#include "talkit/errors.hpp"

namespace talkit {

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    if (!known) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void fetch(const ordered_json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

void load_network(const ordered_json& obj, NetworkConfig& c) {
  reject_unknown(obj,
                 {"input_channels", "base_channels", "head_channels", "base_kernel", "head_kernel",
                  "base_layers", "window_length"},
                 "network");
  fetch(obj, "input_channels", c.input_channels);
  fetch(obj, "base_channels", c.base_channels);
  fetch(obj, "head_channels", c.head_channels);
  fetch(obj, "base_kernel", c.base_kernel);
  fetch(obj, "head_kernel", c.head_kernel);
  fetch(obj, "base_layers", c.base_layers);
  fetch(obj, "window_length", c.window_length);
}

void load_train(const ordered_json& obj, TrainConfig& c) {
  reject_unknown(obj,
                 {"epochs", "lr_early", "lr_late", "switch_epoch", "momentum", "batch_size",
                  "seed", "loss_weights", "clip_norm"},
                 "train");
  fetch(obj, "epochs", c.epochs);
  fetch(obj, "lr_early", c.lr_early);
  fetch(obj, "lr_late", c.lr_late);
  fetch(obj, "switch_epoch", c.switch_epoch);
  fetch(obj, "momentum", c.momentum);
  fetch(obj, "batch_size", c.batch_size);
  fetch(obj, "seed", c.seed);
  fetch(obj, "clip_norm", c.clip_norm);
  if (obj.contains("loss_weights")) {
    auto w = obj.at("loss_weights").get<std::vector<double>>();
    if (w.size() != 4)
      throw ConfigError("loss_weights must have 4 entries (cls, reg, intra, inter)");
    c.weights = {w[0], w[1], w[2], w[3]};
  }
}

void load_synthetic(const ordered_json& obj, SyntheticSpec& s, CorpusSplit& split) {
  reject_unknown(obj,
                 {"seed", "num_train_videos", "num_test_videos", "frames_per_video", "num_classes",
                  "channels", "instances", "duration", "noise_sigma", "class_sep"},
                 "synthetic");
  fetch(obj, "seed", s.seed);
  fetch(obj, "num_train_videos", split.num_train);
  fetch(obj, "num_test_videos", split.num_test);
  fetch(obj, "frames_per_video", s.frames_per_video);
  fetch(obj, "num_classes", s.num_classes);
  fetch(obj, "channels", s.channels);
  fetch(obj, "noise_sigma", s.noise_sigma);
  fetch(obj, "class_sep", s.class_sep);
  if (obj.contains("instances")) {
    auto range = obj.at("instances").get<std::vector<int>>();
    if (range.size() != 2) throw ConfigError("instances must be [min, max]");
    s.min_instances = range[0];
    s.max_instances = range[1];
  }
  if (obj.contains("duration")) {
    auto range = obj.at("duration").get<std::vector<int>>();
    if (range.size() != 2) throw ConfigError("duration must be [min, max]");
    s.min_duration = range[0];
    s.max_duration = range[1];
  }
}

void load_eval(const ordered_json& obj, EvalConfig& c) {
  reject_unknown(obj, {"iou_grid", "map_average_grid", "an_values", "map_ious"}, "eval");
  fetch(obj, "iou_grid", c.iou_grid_proposals);
  fetch(obj, "map_average_grid", c.iou_grid_map);
  fetch(obj, "an_values", c.an_values);
  fetch(obj, "map_ious", c.map_ious);
}

void load_inference(const ordered_json& obj, InferenceSettings& c) {
  reject_unknown(obj,
                 {"nms_sigma", "score_floor", "top_k", "linear_nms", "rise_rule", "refine",
                  "refine_before_scoring", "max_duration", "classify"},
                 "inference");
  fetch(obj, "nms_sigma", c.nms_sigma);
  fetch(obj, "score_floor", c.score_floor);
  fetch(obj, "top_k", c.top_k);
  fetch(obj, "linear_nms", c.linear_nms);
  fetch(obj, "rise_rule", c.rise_rule);
  fetch(obj, "refine", c.refine);
  fetch(obj, "refine_before_scoring", c.refine_before_scoring);
  fetch(obj, "max_duration", c.max_duration);
  fetch(obj, "classify", c.classify);
}

}  // namespace

void InferenceSettings::validate() const {
  if (nms_sigma <= 0.0) throw ConfigError("nms_sigma must be positive");
  if (score_floor < 0.0) throw ConfigError("score_floor must be >= 0");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (max_duration < 0) throw ConfigError("max_duration must be >= 0");
}

void RunConfig::validate() const {
  network.validate();
  train.validate();
  synthetic.validate();
  eval.validate();
  inference.validate();
  if (split.num_train < 0 || split.num_test < 0)
    throw ConfigError("corpus split counts must be >= 0");
  if (synthetic.num_videos != split.num_train + split.num_test)
    throw ConfigError("synthetic.num_videos must equal num_train + num_test");
  if (synthetic.channels != network.input_channels)
    throw ConfigError("synthetic.channels must match network.input_channels");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }

  RunConfig config;
  try {
    reject_unknown(doc, {"network", "train", "synthetic", "eval", "inference"}, "config root");
    if (doc.contains("network")) load_network(doc.at("network"), config.network);
    if (doc.contains("train")) load_train(doc.at("train"), config.train);
    if (doc.contains("synthetic")) load_synthetic(doc.at("synthetic"), config.synthetic,
                                                  config.split);
    if (doc.contains("eval")) load_eval(doc.at("eval"), config.eval);
    if (doc.contains("inference")) load_inference(doc.at("inference"), config.inference);
  } catch (const ordered_json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  config.synthetic.num_videos = config.split.num_train + config.split.num_test;
  config.validate();
  return config;
}

}  // namespace talkit
