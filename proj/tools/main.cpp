// talkit command-line pipeline: gen-data -> train -> infer -> eval, plus a
// gradient-check command for the numerical core.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "talkit/errors.hpp"
#include "talkit/evaluation.hpp"
#include "talkit/gradcheck.hpp"
#include "talkit/inference.hpp"
#include "talkit/io.hpp"
#include "talkit/model.hpp"
#include "talkit/run_config.hpp"
#include "talkit/synthetic.hpp"
#include "talkit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace talkit;

namespace {

constexpr double kSyntheticFps = 25.0;

int default_threads() {
  if (const char* env = std::getenv("TALKIT_THREADS")) {
    int value = std::atoi(env);
    if (value >= 1) return value;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

std::vector<std::string> class_names(int num_classes) {
  std::vector<std::string> names;
  for (int a = 0; a < num_classes; ++a) names.push_back("class_" + std::to_string(a));
  return names;
}

struct LoadedVideo {
  std::string name;
  Tensor features;
  AnnotationSet annotations;
};

// Videos of one split, in manifest order, with features loaded from disk.
std::vector<LoadedVideo> load_split(const fs::path& data_dir, const std::string& split,
                                    const DatasetAnnotations& dataset) {
  Manifest manifest = read_manifest(data_dir / "manifest.json");
  std::vector<LoadedVideo> videos;
  for (const ManifestEntry& entry : manifest.videos) {
    if (entry.split != split) continue;
    const VideoAnnotation* annotation = dataset.find(entry.name);
    if (!annotation) throw DataError("video '" + entry.name + "' missing from annotations");
    LoadedVideo video;
    video.name = entry.name;
    video.features = read_feature_file(data_dir / entry.file);
    video.annotations = annotation->annotation_set();
    if (video.features.shape().rows != annotation->num_frames)
      throw DataError("feature length does not match annotations for '" + entry.name + "'");
    videos.push_back(std::move(video));
  }
  if (videos.empty()) throw DataError("no videos with split '" + split + "' in " +
                                      data_dir.string());
  return videos;
}

int longest_instance(const DatasetAnnotations& dataset, const std::string& split) {
  int longest = 0;
  for (const VideoAnnotation& video : dataset.videos) {
    if (video.split != split) continue;
    for (const ActionInstance& inst : video.instances)
      longest = std::max(longest, inst.end_frame - inst.start_frame);
  }
  return longest;
}

// ---- gen-data --------------------------------------------------------------

int cmd_gen_data(const RunConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir / "features", ec);
  if (ec) throw DataError("cannot create output directory " + (out_dir / "features").string() +
                          ": " + ec.message());

  DatasetAnnotations dataset;
  dataset.classes = class_names(config.synthetic.num_classes);
  Manifest manifest;
  manifest.seed = config.synthetic.seed;
  manifest.num_train = config.split.num_train;
  manifest.num_test = config.split.num_test;

  for (int i = 0; i < config.synthetic.num_videos; ++i) {
    SyntheticVideo video = generate_video(config.synthetic, i);
    const std::string split = i < config.split.num_train ? "train" : "test";
    const std::string file = "features/" + video.name + ".feat";
    write_feature_file(out_dir / file, video.features);

    VideoAnnotation annotation;
    annotation.name = video.name;
    annotation.num_frames = config.synthetic.frames_per_video;
    annotation.fps = kSyntheticFps;
    annotation.split = split;
    annotation.instances = video.annotations.instances;
    dataset.videos.push_back(std::move(annotation));
    manifest.videos.push_back({video.name, file, split, video.seed});
  }
  write_annotations(out_dir / "annotations.json", dataset);
  write_manifest(out_dir / "manifest.json", manifest);
  std::cout << "wrote " << config.synthetic.num_videos << " videos ("
            << config.split.num_train << " train, " << config.split.num_test << " test) to "
            << out_dir.string() << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& out_dir,
              const std::string& resume, int save_every, int threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + ec.message());

  DatasetAnnotations dataset = read_annotations(data_dir / "annotations.json");
  std::vector<LoadedVideo> videos = load_split(data_dir, "train", dataset);

  std::vector<TrainWindow> windows;
  for (const LoadedVideo& video : videos) {
    auto built = build_train_windows(video.features, video.annotations,
                                     config.network.window_length);
    for (TrainWindow& w : built) windows.push_back(std::move(w));
  }

  ModelParams params;
  TrainConfig train_config = config.train;
  train_config.threads = threads;
  if (resume.empty()) {
    params = init_params(config.network, config.train.seed);
  } else {
    Checkpoint checkpoint = load_checkpoint(resume);
    if (!(checkpoint.config == config.network))
      throw ConfigError("checkpoint network configuration does not match the run configuration");
    params = std::move(checkpoint.params);
    train_config.start_epoch = checkpoint.epoch;
  }

  std::ofstream log(out_dir / "train_log.jsonl", std::ios::trunc);
  if (!log) throw DataError("cannot open training log in " + out_dir.string());

  TrainResult result = train(
      config.network, std::move(params), windows, train_config,
      [&](long step, int epoch, const LossReport& report) {
        log << loss_log_line(step, epoch, report) << "\n";
      },
      [&](int epoch, const ModelParams& current, const LossReport&) {
        if (save_every > 0 && (epoch + 1) % save_every == 0) {
          char name[64];
          std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.ckpt", epoch + 1);
          save_checkpoint({config.network, epoch + 1, current}, out_dir / name);
        }
      });

  const int final_epoch = train_config.start_epoch + train_config.epochs;
  save_checkpoint({config.network, final_epoch, result.params}, out_dir / "checkpoint.ckpt");
  for (size_t i = 0; i < result.epoch_means.size(); ++i)
    std::cout << "epoch " << train_config.start_epoch + static_cast<int>(i) << " l_total "
              << format_double(result.epoch_means[i].l_total) << "\n";
  std::cout << "saved " << (out_dir / "checkpoint.ckpt").string() << "\n";
  return 0;
}

// ---- infer -----------------------------------------------------------------

std::vector<double> labels_as_doubles(const std::vector<uint8_t>& labels) {
  std::vector<double> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] ? 1.0 : 0.0;
  return out;
}

int cmd_infer(const RunConfig& config, const fs::path& checkpoint_path, const fs::path& data_dir,
              const std::string& split, const fs::path& out_file, bool phases_from_labels) {
  Checkpoint checkpoint;
  if (!phases_from_labels) checkpoint = load_checkpoint(checkpoint_path);
  const NetworkConfig& net = phases_from_labels ? config.network : checkpoint.config;

  DatasetAnnotations dataset = read_annotations(data_dir / "annotations.json");
  std::vector<LoadedVideo> videos = load_split(data_dir, split, dataset);
  for (const LoadedVideo& video : videos)
    if (video.features.shape().cols != net.input_channels)
      throw ConfigError("feature channels of '" + video.name +
                        "' do not match the model input channels");

  ProposalPipelineConfig pipeline;
  pipeline.max_duration = config.inference.max_duration;
  if (pipeline.max_duration <= 0) {
    pipeline.max_duration = longest_instance(dataset, "train");
    if (pipeline.max_duration <= 0)
      throw DataError("cannot derive max_duration: no training instances; pass --max-duration");
  }
  pipeline.rise_rule = config.inference.rise_rule;
  pipeline.refine = config.inference.refine;
  pipeline.refine_before_scoring = config.inference.refine_before_scoring;
  SoftNmsConfig nms;
  nms.sigma = config.inference.nms_sigma;
  nms.score_floor = config.inference.score_floor;
  nms.top_k = config.inference.top_k;
  nms.linear = config.inference.linear_nms;

  std::vector<std::vector<double>> means;
  if (config.inference.classify) {
    std::vector<LoadedVideo> train_videos = load_split(data_dir, "train", dataset);
    std::vector<std::pair<const Tensor*, const AnnotationSet*>> refs;
    for (const LoadedVideo& video : train_videos)
      refs.push_back({&video.features, &video.annotations});
    means = estimate_class_means(refs, static_cast<int>(dataset.classes.size()));
  }

  std::vector<VideoProposals> output;
  for (const LoadedVideo& video : videos) {
    std::vector<Proposal> merged;
    for (const VideoWindow& window :
         window_video(video.features, video.annotations, net.window_length)) {
      std::vector<double> p_start, p_end, off_start, off_end;
      if (phases_from_labels) {
        PhaseLabels labels = make_phase_labels(window.annotations, net.window_length);
        OffsetTargets targets = make_offset_targets(window.annotations, net.window_length);
        p_start = labels_as_doubles(labels.starting);
        p_end = labels_as_doubles(labels.ending);
        off_start = targets.start_offset;
        off_end = targets.end_offset;
      } else {
        ModelOutputs outputs = run_forward(net, checkpoint.params, window.features);
        p_start = std::move(outputs.p_start);
        p_end = std::move(outputs.p_end);
        off_start = std::move(outputs.offset_start);
        off_end = std::move(outputs.offset_end);
      }
      std::vector<Proposal> proposals = propose_window(p_start, p_end, off_start, off_end,
                                                       pipeline);
      for (Proposal& prop : proposals) {
        prop.start += window.offset;
        prop.end += window.offset;
        merged.push_back(prop);
      }
    }
    std::vector<Proposal> kept = soft_nms(std::move(merged), nms);
    if (config.inference.classify) classify_proposals(kept, video.features, means);
    output.push_back({video.name, std::move(kept)});
  }
  write_proposals(out_file, output);
  std::cout << "wrote proposals for " << output.size() << " videos to " << out_file.string()
            << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

ordered_json metrics_to_json(const MetricsReport& report) {
  ordered_json doc;
  doc["num_videos"] = report.num_videos;
  doc["num_gt"] = report.num_gt;
  ordered_json ar;
  for (const auto& [an, value] : report.ar_at_an) ar[std::to_string(an)] = value;
  doc["ar_at_an"] = ar;
  doc["auc"] = report.auc;
  ordered_json map;
  for (const auto& [iou, value] : report.map_at_iou) map[format_double(iou)] = value;
  doc["map"] = map;
  doc["average_map"] = report.average_map;
  return doc;
}

int cmd_eval(const RunConfig& config, const fs::path& proposals_file, const fs::path& data_dir,
             const std::string& split, const std::string& oracle, const fs::path& out_file,
             const fs::path& curve_file) {
  DatasetAnnotations dataset = read_annotations(data_dir / "annotations.json");
  Manifest manifest = read_manifest(data_dir / "manifest.json");
  std::vector<VideoProposals> proposal_groups = read_proposals(proposals_file);

  std::vector<EvalVideo> videos;
  for (const ManifestEntry& entry : manifest.videos) {
    if (entry.split != split) continue;
    const VideoAnnotation* annotation = dataset.find(entry.name);
    if (!annotation) throw DataError("video '" + entry.name + "' missing from annotations");
    EvalVideo video;
    video.id = entry.name;
    video.gt = annotation->instances;
    for (const VideoProposals& group : proposal_groups)
      if (group.video_id == entry.name) video.proposals = group.proposals;
    videos.push_back(std::move(video));
  }
  if (videos.empty()) throw DataError("no videos with split '" + split + "'");

  MetricsReport plain = compute_metrics(videos, config.eval);
  ordered_json doc = metrics_to_json(plain);

  std::optional<MetricsReport> oracle_report;
  if (oracle != "none") {
    std::vector<EvalVideo> rescored = videos;
    if (oracle == "rank") {
      oracle_rank(rescored);
    } else if (oracle == "cls") {
      oracle_cls(rescored);
    } else if (oracle == "both") {
      oracle_rank(rescored);
      oracle_cls(rescored);
    } else {
      throw ConfigError("unknown oracle mode '" + oracle + "' (use rank, cls, or both)");
    }
    oracle_report = compute_metrics(rescored, config.eval);
    ordered_json block = metrics_to_json(*oracle_report);
    block["mode"] = oracle;
    doc["oracle"] = block;
  }

  std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::trunc);
    if (!out) throw DataError("cannot open report file: " + out_file.string());
    out << text;
  }
  if (!curve_file.empty()) {
    std::ofstream out(curve_file, std::ios::trunc);
    if (!out) throw DataError("cannot open curve file: " + curve_file.string());
    out << "an,ar";
    if (oracle_report) out << ",ar_oracle";
    out << "\n";
    for (size_t i = 0; i < plain.ar_at_an.size(); ++i) {
      out << plain.ar_at_an[i].first << "," << format_double(plain.ar_at_an[i].second);
      if (oracle_report) out << "," << format_double(oracle_report->ar_at_an[i].second);
      out << "\n";
    }
  }
  return 0;
}

// ---- gradcheck ---------------------------------------------------------------

int cmd_gradcheck(const GradCheckOptions& options) {
  std::vector<GradCheckResult> results = run_gradient_checks(options);
  bool all_pass = true;
  for (const GradCheckResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.op << "  points=" << r.points
              << "  max_rel_err=" << format_double(r.max_rel_err) << "\n";
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw NumericError("gradient checks failed");
  std::cout << "all gradient checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bottom-up temporal action localization on synthetic sequences"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = default_threads();
  app.add_option("--config", config_path, "JSON run configuration (defaults used when omitted)");
  app.add_option("--threads", threads, "worker thread cap (env TALKIT_THREADS)");

  // shared override knobs, applied after the config file loads
  struct Overrides {
    std::optional<uint64_t> data_seed, train_seed;
    std::optional<int> num_train, num_test, epochs, batch_size, top_k, max_duration;
    std::optional<std::vector<double>> loss_weights;
    std::optional<double> sigma, score_floor;
    bool rise_rule = false, linear_nms = false, no_refine = false, refine_before_scoring = false;
    bool no_classify = false;
  } over;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", over.data_seed, "synthetic corpus seed");
  gen->add_option("--num-train", over.num_train, "training videos");
  gen->add_option("--num-test", over.num_test, "test videos");

  auto* train_cmd = app.add_subcommand("train", "train a model on a generated corpus");
  std::string train_data, train_out, train_resume;
  int save_every = 0;
  train_cmd->add_option("--data", train_data, "corpus directory")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
  train_cmd->add_option("--save-every", save_every, "save a checkpoint every N epochs");
  train_cmd->add_option("--epochs", over.epochs, "training epochs");
  train_cmd->add_option("--batch-size", over.batch_size, "windows per batch");
  train_cmd->add_option("--seed", over.train_seed, "training seed");
  train_cmd->add_option("--loss-weights", over.loss_weights,
                        "cls,reg,intra,inter loss weights")->delimiter(',');

  auto* infer = app.add_subcommand("infer", "generate scored proposals from a checkpoint");
  std::string infer_ckpt, infer_data, infer_split = "test", infer_out;
  bool phases_from_labels = false;
  infer->add_option("--checkpoint", infer_ckpt, "model checkpoint");
  infer->add_option("--data", infer_data, "corpus directory")->required();
  infer->add_option("--split", infer_split, "data split to run on");
  infer->add_option("--out", infer_out, "proposal file to write")->required();
  infer->add_flag("--phases-from-labels", phases_from_labels,
                  "debug: use ground-truth labels as phase probabilities");
  infer->add_option("--sigma", over.sigma, "soft-nms gaussian sigma");
  infer->add_option("--top-k", over.top_k, "soft-nms selection cap");
  infer->add_option("--score-floor", over.score_floor, "soft-nms drop threshold");
  infer->add_option("--max-duration", over.max_duration,
                    "proposal duration cap (default: longest training instance)");
  infer->add_flag("--rise-rule", over.rise_rule, "use the strict-rise candidate rule");
  infer->add_flag("--linear-nms", over.linear_nms, "linear soft-nms decay");
  infer->add_flag("--no-refine", over.no_refine, "disable boundary refinement");
  infer->add_flag("--refine-before-scoring", over.refine_before_scoring,
                  "refine boundaries before scoring");
  infer->add_flag("--no-classify", over.no_classify, "leave proposals unlabeled");

  auto* eval_cmd = app.add_subcommand("eval", "score a proposal file against ground truth");
  std::string eval_props, eval_data, eval_split = "test", eval_oracle = "none";
  std::string eval_out, eval_curve;
  std::optional<std::vector<int>> eval_an;
  std::optional<std::vector<double>> eval_map_ious;
  eval_cmd->add_option("--proposals", eval_props, "proposal file")->required();
  eval_cmd->add_option("--data", eval_data, "corpus directory")->required();
  eval_cmd->add_option("--split", eval_split, "data split to evaluate");
  eval_cmd->add_option("--oracle", eval_oracle, "oracle mode: none, rank, cls, both");
  eval_cmd->add_option("--out", eval_out, "write the metrics report here");
  eval_cmd->add_option("--curve", eval_curve, "write the AR-AN curve CSV here");
  eval_cmd->add_option("--an", eval_an, "AN values")->delimiter(',');
  eval_cmd->add_option("--map-ious", eval_map_ious, "mAP IoU thresholds")->delimiter(',');

  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of all gradients");
  GradCheckOptions grad_options;
  grad->add_option("--ops", grad_options.only, "restrict to these ops")->delimiter(',');
  grad->add_option("--points", grad_options.points, "random points per op");
  grad->add_option("--seed", grad_options.seed, "harness seed");
  grad->add_flag("--inject-intra-sign-flip", grad_options.flip_intra_gradient,
                 "negative control: corrupt the intra-consistency gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // 0 for --help, 1 for every usage error
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = load_run_config(config_path);
    if (threads < 1) throw ConfigError("--threads must be >= 1");
    config.train.threads = threads;

    if (over.data_seed) config.synthetic.seed = *over.data_seed;
    if (over.num_train) config.split.num_train = *over.num_train;
    if (over.num_test) config.split.num_test = *over.num_test;
    config.synthetic.num_videos = config.split.num_train + config.split.num_test;
    if (over.train_seed) config.train.seed = *over.train_seed;
    if (over.epochs) {
      config.train.epochs = *over.epochs;
      config.train.switch_epoch = std::min(config.train.switch_epoch, *over.epochs);
    }
    if (over.batch_size) config.train.batch_size = *over.batch_size;
    if (over.loss_weights) {
      if (over.loss_weights->size() != 4)
        throw ConfigError("--loss-weights needs 4 values: cls,reg,intra,inter");
      config.train.weights = {(*over.loss_weights)[0], (*over.loss_weights)[1],
                              (*over.loss_weights)[2], (*over.loss_weights)[3]};
    }
    if (over.sigma) config.inference.nms_sigma = *over.sigma;
    if (over.score_floor) config.inference.score_floor = *over.score_floor;
    if (over.top_k) config.inference.top_k = *over.top_k;
    if (over.max_duration) config.inference.max_duration = *over.max_duration;
    if (over.rise_rule) config.inference.rise_rule = true;
    if (over.linear_nms) config.inference.linear_nms = true;
    if (over.no_refine) config.inference.refine = false;
    if (over.refine_before_scoring) config.inference.refine_before_scoring = true;
    if (over.no_classify) config.inference.classify = false;
    if (eval_an) config.eval.an_values = *eval_an;
    if (eval_map_ious) config.eval.map_ious = *eval_map_ious;
    config.validate();

    if (gen->parsed()) return cmd_gen_data(config, gen_out);
    if (train_cmd->parsed())
      return cmd_train(config, train_data, train_out, train_resume, save_every, threads);
    if (infer->parsed()) {
      if (!phases_from_labels && infer_ckpt.empty())
        throw ConfigError("--checkpoint is required unless --phases-from-labels is set");
      return cmd_infer(config, infer_ckpt, infer_data, infer_split, infer_out,
                       phases_from_labels);
    }
    if (eval_cmd->parsed())
      return cmd_eval(config, eval_props, eval_data, eval_split, eval_oracle, eval_out,
                      eval_curve);
    if (grad->parsed()) return cmd_gradcheck(grad_options);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const GenerationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
