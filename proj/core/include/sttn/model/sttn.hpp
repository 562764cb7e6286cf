#pragma once

#include <vector>

#include "sttn/graph/traffic_graph.hpp"
#include "sttn/model/layers.hpp"
#include "sttn/model/params.hpp"

namespace sttn::model {

struct ForwardOptions {
  AttentionTrace* trace = nullptr;
};

// Normalized speed window (..., M, N) -> normalized forecast (..., N, T).
// Lifts the speed channel to d_G, runs every ST block, and feeds the last
// time step to the prediction head.
Tensor sttn_forward(const Tensor& window, const graph::TrafficGraph& graph,
                    const ModelConfig& config, const ModelParams& params,
                    const ForwardOptions& options = {});

// Per-node double loop form of one single-head spatial layer: the message
// m_v aggregates softmax-weighted values of every node u, and the update is
// y_v = FFN(x_v + m_v) + (x_v + m_v). Plain arithmetic, no tensors.
std::vector<std::vector<double>> message_passing_oracle(
    const std::vector<std::vector<double>>& x_nodes, const AttentionHead& head,
    const FeedForward& ffn);

}  // namespace sttn::model
