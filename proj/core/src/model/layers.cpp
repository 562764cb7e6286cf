#include "sttn/model/layers.hpp"

#include <cmath>
#include <string>

#include "sttn/errors.hpp"

namespace sttn::model {

using ad::Shape;

const char* to_string(TransformerKind kind) {
  return kind == TransformerKind::kSpatial ? "spatial" : "temporal";
}

Tensor spatial_temporal_embed(const Tensor& x, const PositionalEmbedding& embed) {
  if (x.rank() < 3) {
    throw DimensionError("embedding input must be (..., M, N, d), got " + ad::shape_str(x.shape()));
  }
  const std::size_t m = x.dim(-3);
  const std::size_t n = x.dim(-2);
  Shape lead(x.shape().begin(), x.shape().end() - 1);  // (..., M, N)
  std::vector<Tensor> parts{x};
  if (embed.d_spatial.defined()) {
    if (embed.d_spatial.dim(0) != n || embed.d_spatial.dim(1) != n) {
      throw DimensionError("spatial dictionary " + ad::shape_str(embed.d_spatial.shape()) +
                           " does not match " + std::to_string(n) + " nodes");
    }
    Shape target = lead;
    target.push_back(n);
    parts.push_back(ad::broadcast_to(embed.d_spatial, target));
  }
  if (embed.d_temporal.defined()) {
    if (embed.d_temporal.dim(0) != m || embed.d_temporal.dim(1) != m) {
      throw DimensionError("temporal dictionary " + ad::shape_str(embed.d_temporal.shape()) +
                           " does not match window length " + std::to_string(m));
    }
    Shape target = lead;
    target.push_back(m);
    parts.push_back(ad::broadcast_to(ad::reshape(embed.d_temporal, {m, 1, m}), target));
  }
  return ad::matmul(ad::concat(parts, -1), embed.proj);
}

AttentionResult multi_head_attention(const Tensor& x, const MultiHeadAttention& params,
                                     const ad::Mask* mask) {
  if (params.heads.empty()) throw ContractError("attention needs at least one head");
  AttentionResult result;
  std::vector<Tensor> outputs;
  for (const auto& head : params.heads) {
    const Tensor q = ad::matmul(x, head.w_q);
    const Tensor k = ad::matmul(x, head.w_k);
    const Tensor v = ad::matmul(x, head.w_v);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head.w_q.dim(1)));
    const Tensor logits = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt);
    Tensor scores = ad::softmax(logits, mask);
    outputs.push_back(ad::matmul(scores, v));
    result.scores.push_back(std::move(scores));
  }
  Tensor merged = outputs.size() == 1 ? outputs.front() : ad::concat(outputs, -1);
  if (params.head_merge.defined()) merged = ad::matmul(merged, params.head_merge);
  result.out = std::move(merged);
  return result;
}

AttentionResult spatial_attention(const Tensor& x, const MultiHeadAttention& params,
                                  const ad::Mask* mask) {
  return multi_head_attention(x, params, mask);
}

AttentionResult temporal_attention(const Tensor& x, const MultiHeadAttention& params) {
  return multi_head_attention(x, params, nullptr);
}

Tensor position_wise_ffn(const Tensor& x, const FeedForward& ffn) {
  const Tensor h0 = ad::relu(ad::matmul(x, ffn.w0));
  const Tensor h1 = ad::relu(ad::matmul(h0, ffn.w1));
  return ad::matmul(h1, ffn.w2);
}

Tensor gated_fusion(const Tensor& y_dynamic, const Tensor& x_fixed, const Gate& gate) {
  if (y_dynamic.shape() != x_fixed.shape()) {
    throw DimensionError("gated fusion inputs " + ad::shape_str(y_dynamic.shape()) + " and " +
                         ad::shape_str(x_fixed.shape()) + " differ");
  }
  const Tensor g =
      ad::sigmoid(ad::add(ad::matmul(y_dynamic, gate.f_s), ad::matmul(x_fixed, gate.f_g)));
  return ad::add(ad::mul(g, y_dynamic), ad::mul(ad::one_minus(g), x_fixed));
}

Tensor transformer_layers(const Tensor& x, const std::vector<TransformerLayer>& layers,
                          const ad::Mask* mask, TransformerKind kind, const TraceScope& scope) {
  Tensor current = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto attended = multi_head_attention(current, layers[l].attention, mask);
    if (scope.trace) {
      for (std::size_t h = 0; h < attended.scores.size(); ++h) {
        scope.trace->push_back({scope.block, kind, l, h, attended.scores[h]});
      }
    }
    const Tensor residual = ad::add(current, attended.out);
    current = ad::add(position_wise_ffn(residual, layers[l].ffn), residual);
  }
  return current;
}

Tensor spatial_transformer(const Tensor& x, const graph::TrafficGraph& graph,
                           const SpatialTransformerParams& params, const ad::Mask* local_mask,
                           const TraceScope& scope) {
  if (local_mask) {
    for (std::size_t i = 0; i < local_mask->rows; ++i) {
      if (!(*local_mask)(i, i)) throw ContractError("local mask must keep every diagonal entry");
    }
  }
  const Tensor embedded =
      params.embed.proj.defined() ? spatial_temporal_embed(x, params.embed) : x;
  const Tensor fixed = graph::chebyshev_graph_conv(embedded, graph, params.theta);
  if (params.layers.empty()) return fixed;
  const Tensor dynamic =
      transformer_layers(embedded, params.layers, local_mask, TransformerKind::kSpatial, scope);
  return gated_fusion(dynamic, fixed, params.gate);
}

Tensor temporal_transformer(const Tensor& x, const TemporalTransformerParams& params,
                            const TraceScope& scope) {
  const Tensor embedded =
      params.embed.proj.defined() ? spatial_temporal_embed(x, params.embed) : x;
  // (..., M, N, d) -> (..., N, M, d): attention runs over time for each node.
  const Tensor per_node = ad::swap_axes(embedded, -3, -2);
  const Tensor out =
      transformer_layers(per_node, params.layers, nullptr, TransformerKind::kTemporal, scope);
  return ad::swap_axes(out, -3, -2);
}

Tensor st_block(const Tensor& x, const graph::TrafficGraph& graph, const BlockParams& params,
                const ad::Mask* local_mask, const TraceScope& scope) {
  const Tensor y_spatial = spatial_transformer(x, graph, params.spatial, local_mask, scope);
  const Tensor x_temporal = ad::add(x, y_spatial);
  const Tensor y_temporal = temporal_transformer(x_temporal, params.temporal, scope);
  return ad::add(y_temporal, x_temporal);
}

Tensor prediction_head(const Tensor& x_last, const PredictionHeadParams& head) {
  return ad::matmul(ad::relu(ad::matmul(x_last, head.w1)), head.w2);
}

}  // namespace sttn::model
