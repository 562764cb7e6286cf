#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sttn/autodiff/gradcheck.hpp"
#include "sttn/autodiff/tensor.hpp"
#include "sttn/matrix.hpp"

namespace sttn::model {

using ad::Tensor;

enum class HeadInput {
  kLastBlock,  // features of the last block only
  kSumBlocks,  // skip-style sum of every block's last-step features
};

struct ModelConfig {
  std::size_t n_nodes = 0;
  std::size_t window = 12;           // M
  std::size_t horizon = 9;           // T
  std::size_t channels = 64;         // d_G
  std::size_t cheb_order = 3;        // K
  std::size_t blocks = 1;
  std::size_t spatial_layers = 2;    // h_S
  std::size_t temporal_layers = 2;   // h_T
  std::size_t spatial_heads = 1;     // a_S
  std::size_t temporal_heads = 1;    // a_T
  bool spatial_embedding = true;
  bool temporal_embedding = true;
  // false drops attention and gating from the spatial transformer, leaving
  // only the fixed Chebyshev branch.
  bool dynamic_spatial = true;
  // 0 attends to every node; k > 0 restricts spatial attention to self plus
  // the k strongest neighbours.
  std::size_t local_mask_k = 0;
  HeadInput head_input = HeadInput::kLastBlock;

  std::size_t ffn_width() const { return 2 * channels; }
  std::size_t head_width() const { return 4 * channels; }

  void validate() const;
};

struct AttentionHead {
  Tensor w_q;  // d_G x d_A
  Tensor w_k;  // d_G x d_A
  Tensor w_v;  // d_G x d_G
};

struct MultiHeadAttention {
  std::vector<AttentionHead> heads;
  Tensor head_merge;  // (heads*d_G) x d_G; undefined for a single head
};

struct FeedForward {
  Tensor w0;  // d_G x d_ff
  Tensor w1;  // d_ff x d_ff
  Tensor w2;  // d_ff x d_G
};

struct TransformerLayer {
  MultiHeadAttention attention;
  FeedForward ffn;
};

// Learnable position dictionaries and the 1x1 projection back to d_G.
// d_spatial is only present in the spatial transformer.
struct PositionalEmbedding {
  Tensor d_spatial;   // N x N, starts as the adjacency
  Tensor d_temporal;  // M x M, starts as the identity
  Tensor proj;        // (d_G + N + M) x d_G, or (d_G + M) x d_G
};

struct Gate {
  Tensor f_s;  // d_G x 1
  Tensor f_g;  // d_G x 1
};

struct SpatialTransformerParams {
  PositionalEmbedding embed;
  std::vector<TransformerLayer> layers;
  Tensor theta;  // (K+1) x d_G x d_G
  Gate gate;
};

struct TemporalTransformerParams {
  PositionalEmbedding embed;
  std::vector<TransformerLayer> layers;
};

struct BlockParams {
  SpatialTransformerParams spatial;
  TemporalTransformerParams temporal;
};

struct PredictionHeadParams {
  Tensor w1;  // d_G x c_p
  Tensor w2;  // c_p x T
};

struct ModelParams {
  Tensor input_lift;  // 1 x d_G
  std::vector<BlockParams> blocks;
  PredictionHeadParams head;

  // Every tensor under a unique dotted name, in a fixed order.
  std::vector<ad::NamedTensor> named() const;
  std::size_t parameter_count() const;
};

// Seeded uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights; dictionaries start
// at the adjacency and the identity.
ModelParams init_params(const ModelConfig& config, const Matrix& adjacency, std::uint64_t seed);

// Independent copy with fresh storage (no aliasing, no graph).
ModelParams deep_copy(const ModelParams& params);

// Calls fn(name, tensor&) for every defined tensor, in named() order.
template <class Params, class Fn>
void visit_params(Params& p, Fn&& fn) {
  auto visit = [&](const std::string& name, auto& t) {
    if (t.defined()) fn(name, t);
  };
  auto visit_layers = [&](const std::string& prefix, auto& layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = layers[l];
      const std::string lp = prefix + ".layers." + std::to_string(l);
      for (std::size_t h = 0; h < layer.attention.heads.size(); ++h) {
        auto& head = layer.attention.heads[h];
        const std::string hp = lp + ".heads." + std::to_string(h);
        visit(hp + ".w_q", head.w_q);
        visit(hp + ".w_k", head.w_k);
        visit(hp + ".w_v", head.w_v);
      }
      visit(lp + ".head_merge", layer.attention.head_merge);
      visit(lp + ".ffn.w0", layer.ffn.w0);
      visit(lp + ".ffn.w1", layer.ffn.w1);
      visit(lp + ".ffn.w2", layer.ffn.w2);
    }
  };
  visit("input_lift", p.input_lift);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    auto& block = p.blocks[b];
    const std::string sp = "blocks." + std::to_string(b) + ".spatial";
    visit(sp + ".embed.d_spatial", block.spatial.embed.d_spatial);
    visit(sp + ".embed.d_temporal", block.spatial.embed.d_temporal);
    visit(sp + ".embed.proj", block.spatial.embed.proj);
    visit_layers(sp, block.spatial.layers);
    visit(sp + ".theta", block.spatial.theta);
    visit(sp + ".gate.f_s", block.spatial.gate.f_s);
    visit(sp + ".gate.f_g", block.spatial.gate.f_g);
    const std::string tp = "blocks." + std::to_string(b) + ".temporal";
    visit(tp + ".embed.d_temporal", block.temporal.embed.d_temporal);
    visit(tp + ".embed.proj", block.temporal.embed.proj);
    visit_layers(tp, block.temporal.layers);
  }
  visit("head.w1", p.head.w1);
  visit("head.w2", p.head.w2);
}

}  // namespace sttn::model
