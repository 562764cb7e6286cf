#include <algorithm>
#include <cmath>

#include "sttn/errors.hpp"
#include "sttn/model/sttn.hpp"

namespace sttn::model {

namespace {

// y = W^T x for W stored row-major as (in x out).
std::vector<double> project(const Tensor& w, const std::vector<double>& x) {
  const std::size_t in = w.dim(0);
  const std::size_t out = w.dim(1);
  if (x.size() != in) throw DimensionError("oracle projection size mismatch");
  const auto data = w.data();
  std::vector<double> y(out, 0.0);
  for (std::size_t i = 0; i < in; ++i)
    for (std::size_t o = 0; o < out; ++o) y[o] += x[i] * data[i * out + o];
  return y;
}

std::vector<double> relu(std::vector<double> x) {
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

}  // namespace

std::vector<std::vector<double>> message_passing_oracle(
    const std::vector<std::vector<double>>& x_nodes, const AttentionHead& head,
    const FeedForward& ffn) {
  const std::size_t n = x_nodes.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(head.w_q.dim(1)));
  std::vector<std::vector<double>> queries, keys, values;
  for (const auto& x : x_nodes) {
    queries.push_back(project(head.w_q, x));
    keys.push_back(project(head.w_k, x));
    values.push_back(project(head.w_v, x));
  }
  std::vector<std::vector<double>> y_nodes;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<double> score(n);
    for (std::size_t u = 0; u < n; ++u) {
      double dot = 0.0;
      for (std::size_t c = 0; c < queries[v].size(); ++c) dot += queries[v][c] * keys[u][c];
      score[u] = dot * scale;
    }
    const double mx = *std::max_element(score.begin(), score.end());
    double total = 0.0;
    for (double& s : score) {
      s = std::exp(s - mx);
      total += s;
    }
    std::vector<double> message(values[v].size(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      const double weight = score[u] / total;
      for (std::size_t c = 0; c < message.size(); ++c) message[c] += weight * values[u][c];
    }
    std::vector<double> residual(message.size());
    for (std::size_t c = 0; c < residual.size(); ++c) residual[c] = x_nodes[v][c] + message[c];
    const auto u_out = project(ffn.w2, relu(project(ffn.w1, relu(project(ffn.w0, residual)))));
    std::vector<double> y(residual.size());
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = u_out[c] + residual[c];
    y_nodes.push_back(std::move(y));
  }
  return y_nodes;
}

}  // namespace sttn::model
