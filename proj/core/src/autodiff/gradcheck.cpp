#include "sttn/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "sttn/errors.hpp"

namespace sttn::ad {

namespace {

double evaluate(const std::function<Tensor()>& loss_fn) {
  NoGradGuard guard;
  const Tensor loss = loss_fn();
  if (loss.numel() != 1) {
    throw ContractError("gradient check needs a scalar loss, got " + shape_str(loss.shape()));
  }
  return loss.item();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

GradCheckReport gradient_check(const std::function<Tensor()>& loss_fn,
                               std::span<const NamedTensor> params, double step) {
  if (!(step >= 1e-8 && step <= 1e-4)) {
    throw ValueError("finite-difference step " + std::to_string(step) +
                     " outside [1e-8, 1e-4]");
  }
  const double base_a = evaluate(loss_fn);
  const double base_b = evaluate(loss_fn);
  if (!same_bits(base_a, base_b)) {
    throw OracleError("loss function is not deterministic: two evaluations differ");
  }

  for (const auto& p : params) {
    if (!p.tensor.is_leaf()) throw ContractError("parameter '" + p.name + "' is not a leaf");
    Tensor t = p.tensor;
    t.zero_grad();
  }
  Tensor loss = loss_fn();
  backward(loss);

  GradCheckReport report;
  for (const auto& p : params) {
    Tensor t = p.tensor;
    const std::vector<double> analytic =
        t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                     : std::vector<double>(t.numel(), 0.0);
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double up = evaluate(loss_fn);
      values[i] = original - step;
      const double down = evaluate(loss_fn);
      values[i] = original;
      const double central = (up - down) / (2.0 * step);
      const double denom = std::max({std::fabs(analytic[i]), std::fabs(central), 1e-12});
      const double err = std::fabs(analytic[i] - central) / denom;
      ++report.entries;
      if (report.worst_param.empty() || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_param = p.name;
        report.worst_index = i;
        report.worst_analytic = analytic[i];
        report.worst_numeric = central;
      }
    }
    t.zero_grad();
  }
  return report;
}

double finite_difference_check(const std::function<Tensor()>& loss_fn,
                               std::span<const NamedTensor> params, double step) {
  return gradient_check(loss_fn, params, step).max_relative_error;
}

}  // namespace sttn::ad
