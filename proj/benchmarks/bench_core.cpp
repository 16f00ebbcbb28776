#include <benchmark/benchmark.h>

#include "talkit/inference.hpp"
#include "talkit/losses.hpp"
#include "talkit/model.hpp"
#include "talkit/rng.hpp"
#include "talkit/trainer.hpp"

using namespace talkit;

namespace {

Tensor random_features(Rng& rng, int t_len, int channels) {
  Tensor t(Shape::matrix(t_len, channels));
  for (int i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-2, 2);
  return t;
}

void BM_Conv1dForward(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  Rng rng(1);
  Tensor input = random_features(rng, t_len, 32);
  Tensor kernel = random_features(rng, 9 * 32, 32);
  Tensor bias(Shape::vector(32));
  for (auto _ : state) {
    Graph g;
    Value out = g.conv1d(g.constant(input), g.constant(kernel), g.constant(bias), 9);
    benchmark::DoNotOptimize(g.value(out).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(t_len) * 32 * 32 * 9);
}
BENCHMARK(BM_Conv1dForward)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  NetworkConfig net;
  Rng rng(2);
  Tensor features = random_features(rng, net.window_length, net.input_channels);
  ModelParams params = init_params(net, 3);
  AnnotationSet annotations{{{30, 70, 0}}, net.window_length};
  PhaseLabels labels = make_phase_labels(annotations, net.window_length);
  OffsetTargets targets = make_offset_targets(annotations, net.window_length);
  for (auto _ : state) {
    Graph g;
    auto leaves = add_param_leaves(g, params, true);
    ForwardValues fv = forward(g, net, leaves, g.constant(features));
    TotalLoss loss = total_loss(g, fv.p_continue, fv.p_start, fv.p_end, fv.offset_start,
                                fv.offset_end, labels, targets);
    g.backward(loss.total);
    benchmark::DoNotOptimize(g.grad(leaves[0]).data());
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_IntraNaive(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  Rng rng(4);
  std::vector<double> p(static_cast<size_t>(t_len));
  std::vector<uint8_t> labels(static_cast<size_t>(t_len));
  for (auto& v : p) v = rng.uniform();
  for (auto& b : labels) b = rng.uniform() < 0.5;
  for (auto _ : state) {
    Graph g;
    Value loss = intra_consistency(g, g.constant(Tensor::vector(std::vector<double>(p))), labels);
    benchmark::DoNotOptimize(g.value(loss).at(0));
  }
}
BENCHMARK(BM_IntraNaive)->Arg(128)->Arg(512);

void BM_IntraFast(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  Rng rng(4);
  std::vector<double> p(static_cast<size_t>(t_len));
  std::vector<uint8_t> labels(static_cast<size_t>(t_len));
  for (auto& v : p) v = rng.uniform();
  for (auto& b : labels) b = rng.uniform() < 0.5;
  for (auto _ : state) {
    Graph g;
    Value loss =
        intra_consistency_fast(g, g.constant(Tensor::vector(std::vector<double>(p))), labels);
    benchmark::DoNotOptimize(g.value(loss).at(0));
  }
}
BENCHMARK(BM_IntraFast)->Arg(128)->Arg(512)->Arg(4096);

void BM_SoftNms(benchmark::State& state) {
  Rng rng(5);
  std::vector<Proposal> proposals;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    double s = rng.uniform(0, 500);
    proposals.push_back({s, s + rng.uniform(2, 60), rng.uniform(), -1});
  }
  for (auto _ : state) {
    auto out = soft_nms(proposals);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SoftNms)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
