#include <doctest.h>

#include <cmath>
#include <string>

#include "talkit/errors.hpp"
#include "talkit/rng.hpp"
#include "talkit/synthetic.hpp"
#include "talkit/trainer.hpp"

using namespace talkit;

namespace {

NetworkConfig tiny_net() {
  NetworkConfig c;
  c.input_channels = 4;
  c.base_channels = 8;
  c.head_channels = 4;
  c.base_kernel = 9;
  c.head_kernel = 5;
  c.base_layers = 2;
  c.window_length = 48;
  return c;
}

std::vector<TrainWindow> tiny_dataset(int videos, uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.num_videos = videos;
  spec.frames_per_video = 48;
  spec.channels = 4;
  spec.num_classes = 3;
  spec.min_instances = 1;
  spec.max_instances = 2;
  spec.min_duration = 6;
  spec.max_duration = 16;
  std::vector<TrainWindow> windows;
  for (const SyntheticVideo& video : generate(spec)) {
    auto built = build_train_windows(video.features, video.annotations, 48);
    for (TrainWindow& w : built) windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace

TEST_CASE("a zero learning rate leaves parameters bitwise unchanged") {
  NetworkConfig net = tiny_net();
  ModelParams params = init_params(net, 5);
  TrainConfig config;
  config.epochs = 1;
  config.lr_early = 0.0;
  config.lr_late = 0.0;
  config.switch_epoch = 1;
  config.batch_size = 4;
  TrainResult result = train(net, params, tiny_dataset(4, 2), config);
  CHECK(result.params.same_values(params));
}

TEST_CASE("overfitting a single window decreases the loss monotonically") {
  NetworkConfig net = tiny_net();
  ModelParams params = init_params(net, 5);
  auto windows = tiny_dataset(1, 3);
  windows.resize(1);
  TrainConfig config;
  config.epochs = 200;  // one step per epoch
  config.batch_size = 1;
  config.switch_epoch = 10;
  TrainResult result = train(net, std::move(params), windows, config);
  REQUIRE(result.epoch_means.size() == 200);
  for (size_t e = 3; e < result.epoch_means.size(); ++e)
    CHECK(result.epoch_means[e].l_total < result.epoch_means[e - 1].l_total);
}

TEST_CASE("training is deterministic in its seeds") {
  NetworkConfig net = tiny_net();
  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 4;
  config.switch_epoch = 2;
  config.seed = 17;
  auto windows = tiny_dataset(6, 9);
  TrainResult a = train(net, init_params(net, 1), windows, config);
  TrainResult b = train(net, init_params(net, 1), windows, config);
  CHECK(a.params.same_values(b.params));
  REQUIRE(a.epoch_means.size() == b.epoch_means.size());
  for (size_t e = 0; e < a.epoch_means.size(); ++e)
    CHECK(a.epoch_means[e].l_total == b.epoch_means[e].l_total);
}

TEST_CASE("thread count does not change the result") {
  NetworkConfig net = tiny_net();
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 4;
  config.switch_epoch = 1;
  auto windows = tiny_dataset(6, 9);
  TrainConfig threaded = config;
  threaded.threads = 3;
  TrainResult serial = train(net, init_params(net, 1), windows, config);
  TrainResult parallel = train(net, init_params(net, 1), windows, threaded);
  CHECK(serial.params.same_values(parallel.params));
}

TEST_CASE("optimizer with zero momentum equals plain gradient descent on a quadratic") {
  // f(x) = 0.5 x^T diag(a) x, grad = a .* x
  std::vector<double> a = {2.0, 0.5, 1.5};
  std::vector<double> x = {1.0, -2.0, 0.7};
  std::vector<double> expected = x;
  SgdMomentum opt(3, 0.0);
  const double lr = 0.1;
  for (int step = 0; step < 25; ++step) {
    std::vector<double> grad(3);
    for (int i = 0; i < 3; ++i) grad[static_cast<size_t>(i)] = a[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    opt.step(x, grad, lr);
    for (int i = 0; i < 3; ++i)
      expected[static_cast<size_t>(i)] -= lr * a[static_cast<size_t>(i)] * expected[static_cast<size_t>(i)];
    for (int i = 0; i < 3; ++i)
      CHECK(x[static_cast<size_t>(i)] == doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-15));
  }
}

TEST_CASE("momentum follows the velocity recurrence exactly") {
  SgdMomentum opt(1, 0.9);
  std::vector<double> x = {1.0};
  double expected_x = 1.0, velocity = 0.0;
  for (int step = 0; step < 10; ++step) {
    std::vector<double> grad = {2.0 * expected_x};
    opt.step(x, grad, 0.05);
    velocity = 0.9 * velocity - 0.05 * 2.0 * expected_x;
    expected_x += velocity;
    CHECK(x[0] == doctest::Approx(expected_x).epsilon(1e-15));
  }
}

TEST_CASE("loss history has one finite entry per epoch") {
  NetworkConfig net = tiny_net();
  TrainConfig config;
  config.epochs = 4;
  config.batch_size = 3;
  config.switch_epoch = 2;
  TrainResult result = train(net, init_params(net, 2), tiny_dataset(5, 21), config);
  REQUIRE(result.epoch_means.size() == 4);
  for (const LossReport& report : result.epoch_means)
    CHECK(report.first_non_finite() == nullptr);
}

TEST_CASE("a diverging run aborts naming the loss component") {
  NetworkConfig net = tiny_net();
  TrainConfig config;
  config.epochs = 20;
  config.batch_size = 2;
  config.switch_epoch = 20;
  config.lr_early = 1e25;  // guaranteed blow-up
  config.lr_late = 1e25;
  try {
    train(net, init_params(net, 2), tiny_dataset(2, 21), config);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("non-finite loss component") != std::string::npos);
  }
}

TEST_CASE("gradient clipping caps the update without changing small steps") {
  NetworkConfig net = tiny_net();
  auto windows = tiny_dataset(2, 4);
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 2;
  config.switch_epoch = 1;
  TrainResult plain = train(net, init_params(net, 8), windows, config);

  TrainConfig generous = config;
  generous.clip_norm = 1e9;  // never binds
  TrainResult unclipped = train(net, init_params(net, 8), windows, generous);
  CHECK(plain.params.same_values(unclipped.params));

  TrainConfig tight = config;
  tight.clip_norm = 1e-6;  // always binds
  TrainResult clipped = train(net, init_params(net, 8), windows, tight);
  CHECK_FALSE(plain.params.same_values(clipped.params));
}

TEST_CASE("train config validation") {
  TrainConfig config;
  config.switch_epoch = 25;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TrainConfig{};
  config.momentum = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TrainConfig{};
  config.weights.intra = -0.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
