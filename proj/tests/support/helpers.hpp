#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sttn/autodiff/tensor.hpp"
#include "sttn/matrix.hpp"

namespace sttn::testing {

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, bool requires_grad = false,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(ad::numel(shape));
  for (double& v : data) v = dist(rng);
  return ad::Tensor(std::move(shape), std::move(data), requires_grad);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// Symmetric, zero diagonal, entries in [0, 1], each off-diagonal pair kept
// with probability `density`.
inline Matrix random_adjacency(std::size_t n, std::mt19937_64& rng, double density = 0.6) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (unit(rng) < density) a(i, j) = a(j, i) = unit(rng);
    }
  return a;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return worst;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return max_abs_diff(a.values(), b.values());
}

inline std::span<const double> values_of(const ad::Tensor& t) { return t.data(); }

}  // namespace sttn::testing
