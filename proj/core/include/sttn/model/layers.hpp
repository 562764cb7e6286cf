#pragma once

#include <cstddef>
#include <vector>

#include "sttn/autodiff/ops.hpp"
#include "sttn/graph/traffic_graph.hpp"
#include "sttn/model/params.hpp"

namespace sttn::model {

enum class TransformerKind { kSpatial, kTemporal };

const char* to_string(TransformerKind kind);

// One attention matrix stack captured during a forward pass. For spatial
// records `scores` is (..., M, N, N); for temporal ones (..., N, M, M).
struct AttentionRecord {
  std::size_t block = 0;
  TransformerKind kind = TransformerKind::kSpatial;
  std::size_t layer = 0;
  std::size_t head = 0;
  Tensor scores;
};

using AttentionTrace = std::vector<AttentionRecord>;

struct AttentionResult {
  Tensor out;                   // (..., R, d_G)
  std::vector<Tensor> scores;   // one (..., R, R) row-stochastic matrix per head
};

// Concatenates the tiled dictionaries to x (..., M, N, d_G) on the channel
// axis and applies the 1x1 projection back to d_G channels.
Tensor spatial_temporal_embed(const Tensor& x, const PositionalEmbedding& embed);

// Scaled dot-product attention over the second-to-last axis of x.
AttentionResult multi_head_attention(const Tensor& x, const MultiHeadAttention& params,
                                     const ad::Mask* mask = nullptr);

// x is one time step (..., N, d_G); mask (N x N) hides non-neighbours.
AttentionResult spatial_attention(const Tensor& x, const MultiHeadAttention& params,
                                  const ad::Mask* mask = nullptr);

// x is one node's window (..., M, d_G); bidirectional, never masked.
AttentionResult temporal_attention(const Tensor& x, const MultiHeadAttention& params);

// ReLU(ReLU(x W0) W1) W2, applied row-wise.
Tensor position_wise_ffn(const Tensor& x, const FeedForward& ffn);

// g = sigmoid(y f_s + x f_g) per row; g*y + (1-g)*x.
Tensor gated_fusion(const Tensor& y_dynamic, const Tensor& x_fixed, const Gate& gate);

struct TraceScope {
  AttentionTrace* trace = nullptr;
  std::size_t block = 0;
};

// Attention -> residual -> FFN -> residual, repeated once per layer.
Tensor transformer_layers(const Tensor& x, const std::vector<TransformerLayer>& layers,
                          const ad::Mask* mask, TransformerKind kind, const TraceScope& scope);

Tensor spatial_transformer(const Tensor& x, const graph::TrafficGraph& graph,
                           const SpatialTransformerParams& params, const ad::Mask* local_mask,
                           const TraceScope& scope = {});

Tensor temporal_transformer(const Tensor& x, const TemporalTransformerParams& params,
                            const TraceScope& scope = {});

// X_T = X + S(X); returns T(X_T) + X_T.
Tensor st_block(const Tensor& x, const graph::TrafficGraph& graph, const BlockParams& params,
                const ad::Mask* local_mask, const TraceScope& scope = {});

// Two shared 1x1 convolutions with a ReLU between: (..., N, d_G) -> (..., N, T).
Tensor prediction_head(const Tensor& x_last, const PredictionHeadParams& head);

}  // namespace sttn::model
