#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sttn/autodiff/ops.hpp"
#include "sttn/autodiff/tensor.hpp"
#include "sttn/matrix.hpp"

namespace sttn::graph {

struct DistanceEntry {
  std::size_t from = 0;
  std::size_t to = 0;
  double meters = 0.0;

  bool operator==(const DistanceEntry&) const = default;
};

struct KernelOptions {
  // Unset: standard deviation of the finite distances in the input list.
  std::optional<double> sigma;
  double epsilon = 0.1;
};

struct AdjacencyResult {
  Matrix adjacency;
  std::vector<std::size_t> isolated_nodes;
  std::vector<std::string> warnings;
};

double default_sigma(std::span<const DistanceEntry> distances);

// A_ij = exp(-d^2 / sigma^2) when that is >= epsilon and i != j, else 0;
// symmetrized with symmetrize_max before returning.
AdjacencyResult gaussian_kernel_adjacency(std::span<const DistanceEntry> distances, std::size_t n,
                                          const KernelOptions& options = {});

// out_ij = out_ji = max(A_ij, A_ji), zero diagonal.
Matrix symmetrize_max(const Matrix& directed);

// L = I - D^{-1/2} A D^{-1/2}; zero-degree nodes use D^{-1/2} := 0.
Matrix normalized_laplacian(const Matrix& adjacency);

struct PowerIteration {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
};

// Dominant eigenvalue of a symmetric positive semidefinite matrix. Stops
// when ||Av - θv|| <= rel_tol·θ.
PowerIteration dominant_eigenvalue(const Matrix& sym, double rel_tol = 1e-9,
                                   std::size_t max_iterations = 10000);

struct ScaledLaplacian {
  Matrix laplacian;
  Matrix scaled;  // 2L/λ_max - I
  double lambda_max = 0.0;
  std::size_t iterations = 0;
};

ScaledLaplacian scaled_laplacian(const Matrix& adjacency);

// [T_0(L̃), ..., T_K(L̃)] via T_k = 2 L̃ T_{k-1} - T_{k-2}.
std::vector<Matrix> chebyshev_basis(const Matrix& scaled, std::size_t order);

// Immutable road graph plus its precomputed Chebyshev operators.
class TrafficGraph {
 public:
  TrafficGraph(Matrix adjacency, std::size_t cheb_order);

  std::size_t n_nodes() const { return adjacency_.rows(); }
  std::size_t cheb_order() const { return basis_.size() - 1; }
  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& laplacian() const { return laplacian_; }
  const Matrix& scaled_laplacian() const { return scaled_; }
  double lambda_max() const { return lambda_max_; }
  const std::vector<Matrix>& cheb_basis() const { return basis_; }
  const std::vector<ad::Tensor>& cheb_operators() const { return operators_; }

  // Self plus the k strongest-weighted neighbours of every node.
  ad::Mask knn_mask(std::size_t k) const;

 private:
  Matrix adjacency_;
  Matrix laplacian_;
  Matrix scaled_;
  double lambda_max_ = 0.0;
  std::vector<Matrix> basis_;
  std::vector<ad::Tensor> operators_;
};

// X_G[:, j] = sum_i sum_k theta[k][i][j] T_k(L̃) X[:, i] over x of shape
// (..., N, d_in) and theta of shape (K+1, d_in, d_out).
ad::Tensor chebyshev_graph_conv(const ad::Tensor& x, const TrafficGraph& graph,
                                const ad::Tensor& theta);

}  // namespace sttn::graph
