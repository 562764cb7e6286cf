#include <string>

#include "sttn/autodiff/ops.hpp"
#include "sttn/errors.hpp"
#include "sttn/graph/traffic_graph.hpp"

namespace sttn::graph {

ad::Tensor chebyshev_graph_conv(const ad::Tensor& x, const TrafficGraph& graph,
                                const ad::Tensor& theta) {
  const auto& ops = graph.cheb_operators();
  if (theta.rank() != 3 || theta.dim(0) != ops.size()) {
    throw DimensionError("theta " + ad::shape_str(theta.shape()) + " does not match K+1 = " +
                         std::to_string(ops.size()) + " Chebyshev terms");
  }
  if (x.rank() < 2 || x.dim(-2) != graph.n_nodes() || x.dim(-1) != theta.dim(1)) {
    throw DimensionError("graph conv input " + ad::shape_str(x.shape()) + " vs theta " +
                         ad::shape_str(theta.shape()) + " on " +
                         std::to_string(graph.n_nodes()) + " nodes");
  }
  // Stack T_k X along channels so one product applies every theta_k at once:
  // column k*d_in + i of the stack pairs with theta[k][i][:].
  std::vector<ad::Tensor> terms;
  terms.reserve(ops.size());
  terms.push_back(x);
  for (std::size_t k = 1; k < ops.size(); ++k) terms.push_back(ad::matmul(ops[k], x));
  const ad::Tensor stacked = terms.size() == 1 ? x : ad::concat(terms, -1);
  const ad::Tensor weights =
      ad::reshape(theta, {theta.dim(0) * theta.dim(1), theta.dim(2)});
  return ad::matmul(stacked, weights);
}

}  // namespace sttn::graph
