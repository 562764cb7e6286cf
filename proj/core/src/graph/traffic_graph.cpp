#include "sttn/graph/traffic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sttn/errors.hpp"

namespace sttn::graph {

double default_sigma(std::span<const DistanceEntry> distances) {
  std::vector<double> finite;
  for (const auto& d : distances) {
    if (std::isfinite(d.meters)) finite.push_back(d.meters);
  }
  if (finite.empty()) throw ValueError("cannot derive sigma from an empty distance list");
  const double mean = std::accumulate(finite.begin(), finite.end(), 0.0) /
                      static_cast<double>(finite.size());
  double ss = 0.0;
  for (double d : finite) ss += (d - mean) * (d - mean);
  return std::sqrt(ss / static_cast<double>(finite.size()));
}

AdjacencyResult gaussian_kernel_adjacency(std::span<const DistanceEntry> distances, std::size_t n,
                                          const KernelOptions& options) {
  for (const auto& d : distances) {
    if (d.from >= n || d.to >= n) {
      throw IndexError("distance entry (" + std::to_string(d.from) + ", " + std::to_string(d.to) +
                       ") out of range for " + std::to_string(n) + " nodes");
    }
    if (d.meters < 0.0 || std::isnan(d.meters)) {
      throw ValueError("negative distance between " + std::to_string(d.from) + " and " +
                       std::to_string(d.to));
    }
  }
  const double sigma = options.sigma ? *options.sigma : default_sigma(distances);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValueError("kernel sigma must be positive, got " + std::to_string(sigma));
  }
  if (!(options.epsilon >= 0.0 && options.epsilon < 1.0)) {
    throw ValueError("kernel epsilon must lie in [0, 1), got " + std::to_string(options.epsilon));
  }
  Matrix directed(n, n);
  for (const auto& d : distances) {
    if (d.from == d.to) continue;
    const double w = std::exp(-(d.meters * d.meters) / (sigma * sigma));
    if (w >= options.epsilon) {
      directed(d.from, d.to) = std::max(directed(d.from, d.to), w);
    }
  }
  AdjacencyResult result;
  result.adjacency = symmetrize_max(directed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = result.adjacency.row(i);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) {
      result.isolated_nodes.push_back(i);
      result.warnings.push_back("node " + std::to_string(i) + " has no edges after thresholding");
    }
  }
  return result;
}

Matrix symmetrize_max(const Matrix& directed) {
  if (directed.rows() != directed.cols()) {
    throw DimensionError("adjacency must be square, got " + std::to_string(directed.rows()) +
                         "x" + std::to_string(directed.cols()));
  }
  const std::size_t n = directed.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (directed(i, j) < 0.0 || std::isnan(directed(i, j))) {
        throw ValueError("negative adjacency entry at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
      if (i != j) out(i, j) = std::max(directed(i, j), directed(j, i));
    }
  }
  return out;
}

Matrix normalized_laplacian(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += a(i, j);
    inv_sqrt[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
  }
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      l(i, j) = (i == j ? 1.0 : 0.0) - inv_sqrt[i] * a(i, j) * inv_sqrt[j];
    }
  }
  return l;
}

PowerIteration dominant_eigenvalue(const Matrix& sym, double rel_tol,
                                   std::size_t max_iterations) {
  const std::size_t n = sym.rows();
  if (n == 0 || sym.cols() != n) throw DimensionError("power iteration needs a square matrix");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    const double norm = std::sqrt(s);
    for (double& e : x) e /= norm;
    return norm;
  };
  normalize(v);
  std::vector<double> w(n);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += sym(i, j) * v[j];
      w[i] = acc;
    }
    double theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) theta += v[i] * w[i];
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += (w[i] - theta * v[i]) * (w[i] - theta * v[i]);
    residual = std::sqrt(residual);
    if (residual <= rel_tol * std::fabs(theta)) return {theta, it};
    if (normalize(w) == 0.0) return {0.0, it};
    std::swap(v, w);
  }
  throw NumericError("power iteration did not converge in " + std::to_string(max_iterations) +
                     " iterations");
}

ScaledLaplacian scaled_laplacian(const Matrix& adjacency) {
  ScaledLaplacian out;
  out.laplacian = normalized_laplacian(adjacency);
  const auto power = dominant_eigenvalue(out.laplacian);
  out.lambda_max = power.eigenvalue;
  out.iterations = power.iterations;
  const std::size_t n = adjacency.rows();
  out.scaled = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.scaled(i, j) = 2.0 * out.laplacian(i, j) / out.lambda_max - (i == j ? 1.0 : 0.0);
    }
  }
  return out;
}

std::vector<Matrix> chebyshev_basis(const Matrix& scaled, std::size_t order) {
  const std::size_t n = scaled.rows();
  std::vector<Matrix> basis;
  basis.push_back(Matrix::identity(n));
  if (order >= 1) basis.push_back(scaled);
  for (std::size_t k = 2; k <= order; ++k) {
    Matrix next = matmul(scaled, basis[k - 1]);
    for (std::size_t i = 0; i < n * n; ++i) {
      next.data()[i] = 2.0 * next.data()[i] - basis[k - 2].data()[i];
    }
    basis.push_back(std::move(next));
  }
  return basis;
}

TrafficGraph::TrafficGraph(Matrix adjacency, std::size_t cheb_order)
    : adjacency_(std::move(adjacency)) {
  const std::size_t n = adjacency_.rows();
  if (n == 0 || adjacency_.cols() != n) {
    throw DimensionError("adjacency must be a non-empty square matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) throw ValueError("adjacency diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double w = adjacency_(i, j);
      if (!(w >= 0.0 && w <= 1.0)) throw ValueError("adjacency entries must lie in [0, 1]");
      if (w != adjacency_(j, i)) throw ValueError("adjacency must be symmetric");
    }
  }
  auto sl = graph::scaled_laplacian(adjacency_);
  laplacian_ = std::move(sl.laplacian);
  scaled_ = std::move(sl.scaled);
  lambda_max_ = sl.lambda_max;
  basis_ = chebyshev_basis(scaled_, cheb_order);
  for (const auto& t : basis_) operators_.emplace_back(ad::Shape{n, n}, t.values());
}

ad::Mask TrafficGraph::knn_mask(std::size_t k) const {
  const std::size_t n = n_nodes();
  ad::Mask mask{n, n, std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    mask.keep[i * n + i] = 1;
    std::vector<std::size_t> nbrs;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && adjacency_(i, j) > 0.0) nbrs.push_back(j);
    }
    std::stable_sort(nbrs.begin(), nbrs.end(), [&](std::size_t a, std::size_t b) {
      return adjacency_(i, a) > adjacency_(i, b);
    });
    for (std::size_t r = 0; r < std::min(k, nbrs.size()); ++r) mask.keep[i * n + nbrs[r]] = 1;
  }
  return mask;
}

}  // namespace sttn::graph
