#include "sttn/train/metrics.hpp"

#include <cmath>

#include "sttn/autodiff/ops.hpp"
#include "sttn/errors.hpp"

namespace sttn::train {

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw DimensionError("metrics need equal, non-empty prediction and truth");
  }
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
    if (std::fabs(truth[i]) > 1e-6) {
      pct_sum += std::fabs(e) / std::fabs(truth[i]);
      ++pct_count;
    }
  }
  const double n = static_cast<double>(predicted.size());
  Metrics m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  if (pct_count > 0) m.mape_pct = 100.0 * pct_sum / static_cast<double>(pct_count);
  return m;
}

ad::Tensor mae_loss(const ad::Tensor& predicted, const ad::Tensor& truth) {
  if (predicted.shape() != truth.shape()) {
    throw DimensionError("mae_loss shapes " + ad::shape_str(predicted.shape()) + " and " +
                         ad::shape_str(truth.shape()) + " differ");
  }
  return ad::mean(ad::abs(ad::sub(predicted, truth)));
}

}  // namespace sttn::train
