#include "sttn/train/model_gradcheck.hpp"

#include <random>

#include "sttn/data/synth.hpp"
#include "sttn/graph/traffic_graph.hpp"
#include "sttn/model/sttn.hpp"
#include "sttn/autodiff/ops.hpp"

namespace sttn::train {

model::ModelConfig gradcheck_model_config() {
  model::ModelConfig config;
  config.n_nodes = 4;
  config.window = 4;
  config.horizon = 2;
  config.channels = 8;
  config.cheb_order = 2;
  config.blocks = 1;
  config.spatial_layers = 1;
  config.temporal_layers = 1;
  return config;
}

ad::GradCheckReport model_gradient_check(const model::ModelConfig& config,
                                         const ModelGradCheckOptions& options) {
  config.validate();
  const auto synth = data::synth_generate(config.n_nodes, config.window + config.horizon,
                                          options.seed);
  graph::KernelOptions kernel;
  kernel.sigma = 1500.0;
  const auto adjacency =
      graph::gaussian_kernel_adjacency(synth.distances, config.n_nodes, kernel).adjacency;
  const graph::TrafficGraph graph(adjacency, config.cheb_order);
  const model::ModelParams params = model::init_params(config, adjacency, options.seed);

  std::mt19937_64 rng(options.seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(options.batch * config.window * config.n_nodes);
  for (double& v : x) v = normal(rng);
  const ad::Tensor input({options.batch, config.window, config.n_nodes}, std::move(x));
  ad::Tensor target;
  {
    ad::NoGradGuard no_grad;
    const ad::Tensor at_point = model::sttn_forward(input, graph, config, params);
    std::vector<double> y(at_point.data().begin(), at_point.data().end());
    for (double& v : y) v += options.target_offset * normal(rng);
    target = ad::Tensor(at_point.shape(), std::move(y));
  }

  const auto named = params.named();
  return ad::gradient_check(
      [&] {
        const ad::Tensor residual =
            ad::sub(model::sttn_forward(input, graph, config, params), target);
        return ad::mean(ad::square(residual));
      },
      named, options.step);
}

}  // namespace sttn::train
