#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sttn/data/synth.hpp"
#include "sttn/model/sttn.hpp"
#include "sttn/train/metrics.hpp"
#include "sttn/train/optim.hpp"
#include "sttn/train/trainer.hpp"

namespace {

using namespace sttn;

ad::Tensor random_tensor(ad::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = z(rng);
  return ad::Tensor(std::move(shape), std::move(v), grad);
}

void BM_BatchedMatmul(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({12, 8, d}, 1);
  const auto b = random_tensor({d, d}, 2);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 12 * 8 * d * d);
}
BENCHMARK(BM_BatchedMatmul)->Arg(16)->Arg(64);

struct Setup {
  train::TrainConfig config;
  Matrix adjacency;
  data::DatasetSplits splits;
  model::ModelParams params;

  explicit Setup(std::size_t channels) {
    const auto synth = data::synth_generate(8, 600, 7);
    config.model.n_nodes = 8;
    config.model.channels = channels;
    graph::KernelOptions k;
    k.sigma = 1500.0;
    adjacency = graph::gaussian_kernel_adjacency(synth.distances, 8, k).adjacency;
    splits = data::prepare_datasets(synth.series.values, 12, 9);
    params = model::init_params(config.model, adjacency, 0);
  }
};

void BM_Forward(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  const graph::TrafficGraph g(s.adjacency, s.config.model.cheb_order);
  std::vector<std::size_t> idx(50);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto x = train::batch_inputs(s.splits.train, idx);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model::sttn_forward(x, g, s.config.model, s.params));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  Setup s(static_cast<std::size_t>(state.range(0)));
  const graph::TrafficGraph g(s.adjacency, s.config.model.cheb_order);
  std::vector<std::size_t> idx(50);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto y = train::batch_targets(s.splits.train, idx);
  const auto named = s.params.named();
  train::RmspropState opt;
  for (auto _ : state) {
    for (auto p : named) p.tensor.zero_grad();
    const auto loss = train::mae_loss(
        train::predict_batch(s.params, s.config.model, g, s.splits.train, idx), y);
    ad::backward(loss);
    train::rmsprop_step(named, opt, 1e-3, {});
  }
}
BENCHMARK(BM_TrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
