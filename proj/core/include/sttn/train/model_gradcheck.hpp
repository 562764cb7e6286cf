#pragma once

#include <cstdint>

#include "sttn/autodiff/gradcheck.hpp"
#include "sttn/model/params.hpp"

namespace sttn::train {

struct ModelGradCheckOptions {
  std::size_t batch = 2;
  double step = 1e-5;
  std::uint64_t seed = 1;
  // Targets sit this far (times N(0,1)) from the prediction at the check
  // point. A small loss has a fine floating-point quantum, so gradients near
  // 1e-10 still resolve; squared residuals keep the probe free of kinks.
  double target_offset = 1e-2;
};

// The small model used to verify reverse-mode gradients end to end:
// 4 nodes, M=4, T=2, d_G=8, K=2, one block with one layer per transformer.
model::ModelConfig gradcheck_model_config();

// Builds a synthetic road graph, seeded parameters and a random normalized
// batch for `config`, then finite-differences mean((sttn_forward - y)^2)
// over every parameter entry.
ad::GradCheckReport model_gradient_check(const model::ModelConfig& config,
                                         const ModelGradCheckOptions& options = {});

}  // namespace sttn::train
