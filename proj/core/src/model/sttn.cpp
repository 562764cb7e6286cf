#include "sttn/model/sttn.hpp"

#include <optional>
#include <string>

#include "sttn/errors.hpp"

namespace sttn::model {

namespace {

// (..., M, N, d) -> (..., N, d) at the final time step.
Tensor last_step(const Tensor& x) {
  const std::size_t m = x.dim(-3);
  ad::Shape shape = x.shape();
  shape.erase(shape.end() - 3);
  return ad::reshape(ad::slice(x, -3, m - 1, m), shape);
}

}  // namespace

Tensor sttn_forward(const Tensor& window, const graph::TrafficGraph& graph,
                    const ModelConfig& config, const ModelParams& params,
                    const ForwardOptions& options) {
  if (window.rank() < 2 || window.dim(-2) != config.window) {
    throw ConfigError("window " + ad::shape_str(window.shape()) + " does not have M=" +
                      std::to_string(config.window) + " steps");
  }
  if (window.dim(-1) != config.n_nodes || graph.n_nodes() != config.n_nodes) {
    throw ConfigError("window has " + std::to_string(window.dim(-1)) + " nodes, graph has " +
                      std::to_string(graph.n_nodes()) + ", model expects " +
                      std::to_string(config.n_nodes));
  }
  std::optional<ad::Mask> mask;
  if (config.local_mask_k > 0) mask = graph.knn_mask(config.local_mask_k);

  ad::Shape lifted_shape = window.shape();
  lifted_shape.push_back(1);
  Tensor x = ad::matmul(ad::reshape(window, lifted_shape), params.input_lift);

  Tensor head_input;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    x = st_block(x, graph, params.blocks[b], mask ? &*mask : nullptr, {options.trace, b});
    if (config.head_input == HeadInput::kSumBlocks) {
      head_input = head_input.defined() ? ad::add(head_input, last_step(x)) : last_step(x);
    }
  }
  if (config.head_input == HeadInput::kLastBlock) head_input = last_step(x);
  return prediction_head(head_input, params.head);
}

}  // namespace sttn::model
