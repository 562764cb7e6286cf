#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "sttn/autodiff/tensor.hpp"

namespace sttn::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries = 0;
};

// Compares reverse-mode gradients of `loss_fn` against central differences
// for every entry of every parameter. `loss_fn` must rebuild its graph from
// the current parameter values on each call and return a scalar.
//
// Per-entry error is |analytic - central| / max(|analytic|, |central|, 1e-12).
// The step must lie in [1e-8, 1e-4]. Throws OracleError if two evaluations
// at the same point disagree.
GradCheckReport gradient_check(const std::function<Tensor()>& loss_fn,
                               std::span<const NamedTensor> params, double step);

double finite_difference_check(const std::function<Tensor()>& loss_fn,
                               std::span<const NamedTensor> params, double step);

}  // namespace sttn::ad
