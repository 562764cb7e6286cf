#include "sttn/model/params.hpp"

#include <cmath>
#include <random>

#include "sttn/errors.hpp"

namespace sttn::model {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(n_nodes, "n_nodes");
  positive(window, "M");
  positive(horizon, "T");
  positive(channels, "d_G");
  positive(blocks, "n_blocks");
  positive(spatial_heads, "a_S");
  positive(temporal_heads, "a_T");
  if (dynamic_spatial) positive(spatial_layers, "h_S");
  positive(temporal_layers, "h_T");
  if (channels % spatial_heads != 0) {
    throw ConfigError("d_G=" + std::to_string(channels) + " is not divisible by a_S=" +
                      std::to_string(spatial_heads));
  }
  if (channels % temporal_heads != 0) {
    throw ConfigError("d_G=" + std::to_string(channels) + " is not divisible by a_T=" +
                      std::to_string(temporal_heads));
  }
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(std::size_t rows, std::size_t cols) { return uniform({rows, cols}, rows); }

  Tensor uniform(ad::Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> data(ad::numel(shape));
    for (double& v : data) v = dist(rng_);
    return Tensor(std::move(shape), std::move(data), true);
  }

 private:
  std::mt19937_64 rng_;
};

std::vector<TransformerLayer> make_layers(Initializer& init, std::size_t count, std::size_t heads,
                                          std::size_t d, std::size_t d_ff) {
  const std::size_t d_a = d / heads;
  std::vector<TransformerLayer> layers(count);
  for (auto& layer : layers) {
    for (std::size_t h = 0; h < heads; ++h) {
      AttentionHead head;
      head.w_q = init.uniform(d, d_a);
      head.w_k = init.uniform(d, d_a);
      head.w_v = init.uniform(d, d);
      layer.attention.heads.push_back(std::move(head));
    }
    if (heads > 1) layer.attention.head_merge = init.uniform(heads * d, d);
    layer.ffn.w0 = init.uniform(d, d_ff);
    layer.ffn.w1 = init.uniform(d_ff, d_ff);
    layer.ffn.w2 = init.uniform(d_ff, d);
  }
  return layers;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, const Matrix& adjacency, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.n_nodes;
  const std::size_t m = config.window;
  const std::size_t d = config.channels;
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ConfigError("adjacency is " + std::to_string(adjacency.rows()) + "x" +
                      std::to_string(adjacency.cols()) + " but the model has " +
                      std::to_string(n) + " nodes");
  }
  Initializer init(seed);
  ModelParams p;
  p.input_lift = init.uniform(1, d);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    BlockParams block;
    auto& sp = block.spatial;
    if (config.spatial_embedding) {
      sp.embed.d_spatial = Tensor({n, n}, adjacency.values(), true);
      sp.embed.d_temporal = Tensor::identity(m, true);
      sp.embed.proj = init.uniform(d + n + m, d);
    }
    if (config.dynamic_spatial) {
      sp.layers = make_layers(init, config.spatial_layers, config.spatial_heads, d,
                              config.ffn_width());
    }
    sp.theta = init.uniform({config.cheb_order + 1, d, d}, (config.cheb_order + 1) * d);
    if (config.dynamic_spatial) {
      sp.gate.f_s = init.uniform(d, 1);
      sp.gate.f_g = init.uniform(d, 1);
    }
    auto& tp = block.temporal;
    if (config.temporal_embedding) {
      tp.embed.d_temporal = Tensor::identity(m, true);
      tp.embed.proj = init.uniform(d + m, d);
    }
    tp.layers = make_layers(init, config.temporal_layers, config.temporal_heads, d,
                            config.ffn_width());
    p.blocks.push_back(std::move(block));
  }
  p.head.w1 = init.uniform(d, config.head_width());
  p.head.w2 = init.uniform(config.head_width(), config.horizon);
  return p;
}

std::vector<ad::NamedTensor> ModelParams::named() const {
  std::vector<ad::NamedTensor> out;
  visit_params(*this, [&](const std::string& name, const Tensor& t) { out.push_back({name, t}); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  visit_params(*this, [&](const std::string&, const Tensor& t) { total += t.numel(); });
  return total;
}

ModelParams deep_copy(const ModelParams& params) {
  ModelParams copy = params;
  visit_params(copy, [](const std::string&, Tensor& t) {
    const auto values = t.data();
    t = Tensor(t.shape(), std::vector<double>(values.begin(), values.end()), true);
  });
  return copy;
}

}  // namespace sttn::model
