#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "talkit/errors.hpp"
#include "talkit/run_config.hpp"

using namespace talkit;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const char* name, const std::string& text) {
  fs::path dir = fs::temp_directory_path() / "talkit_config_tests";
  fs::create_directories(dir);
  fs::path path = dir / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("an empty config file yields the defaults") {
  RunConfig config = load_run_config(write_config("empty.json", "{}"));
  CHECK(config.network.base_channels == 32);
  CHECK(config.train.epochs == 20);
  CHECK(config.synthetic.num_videos == 250);
  CHECK(config.split.num_train == 200);
  CHECK(config.eval.an_values == std::vector<int>{10, 50, 100, 200});
  CHECK(config.inference.nms_sigma == 0.5);
}

TEST_CASE("config files may carry comments and partial sections") {
  RunConfig config = load_run_config(write_config("partial.json", R"({
    // smaller corpus for a quick run
    "synthetic": {"num_train_videos": 12, "num_test_videos": 4, "seed": 9},
    "train": {"epochs": 5, "switch_epoch": 3, "loss_weights": [1, 1, 0, 0]}
  })"));
  CHECK(config.split.num_train == 12);
  CHECK(config.synthetic.num_videos == 16);
  CHECK(config.synthetic.seed == 9);
  CHECK(config.train.epochs == 5);
  CHECK(config.train.weights.intra == 0.0);
  CHECK(config.train.weights.cls == 1.0);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(load_run_config(write_config("root.json", R"({"nets": {}})")), ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config("nested.json", R"({"network": {"channels": 3}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config("inf.json", R"({"inference": {"sigma": 0.5}})")),
      ConfigError);
}

TEST_CASE("invalid values are rejected with config errors") {
  CHECK_THROWS_AS(
      load_run_config(write_config("kernel.json", R"({"network": {"base_kernel": 4}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config("weights.json", R"({"train": {"loss_weights": [1, 2]}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config("momentum.json", R"({"train": {"momentum": 1.5}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config("grid.json", R"({"eval": {"an_values": [50, 10]}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(
          write_config("chan.json", R"({"synthetic": {"channels": 6}, "network": {}})")),
      ConfigError);  // channels must match network input channels
}

TEST_CASE("missing config file is a config error") {
  CHECK_THROWS_AS(load_run_config("/nonexistent/talkit.json"), ConfigError);
}

TEST_CASE("the checked-in example config loads") {
  fs::path example = fs::path(TALKIT_SOURCE_DIR) / "config" / "example.json";
  RunConfig config = load_run_config(example);
  config.validate();
  CHECK(config.network.window_length == 128);
}
