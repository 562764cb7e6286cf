#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "sttn/errors.hpp"
#include "sttn/graph/traffic_graph.hpp"

namespace sttn::graph {
namespace {

using sttn::testing::max_abs_diff;
using sttn::testing::random_adjacency;
using sttn::testing::random_matrix;
using sttn::testing::random_tensor;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

TEST(GaussianKernel, ZeroDistanceIsOneAndSigmaIsExpMinusOne) {
  const std::vector<DistanceEntry> d{{0, 1, 0.0}, {1, 2, 100.0}};
  KernelOptions opts;
  opts.sigma = 100.0;
  opts.epsilon = 0.0;
  const auto result = gaussian_kernel_adjacency(d, 3, opts);
  EXPECT_EQ(result.adjacency(0, 1), 1.0);
  EXPECT_NEAR(result.adjacency(1, 2), 0.36788, 5e-6);
  EXPECT_DOUBLE_EQ(result.adjacency(2, 1), result.adjacency(1, 2));
}

TEST(GaussianKernel, ThresholdPrunesAndIsolationWarns) {
  const std::vector<DistanceEntry> d{{0, 1, 100.0}};
  KernelOptions opts;
  opts.sigma = 100.0;
  opts.epsilon = 0.5;
  const auto result = gaussian_kernel_adjacency(d, 3, opts);
  EXPECT_EQ(result.adjacency(0, 1), 0.0);
  EXPECT_EQ(result.isolated_nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_FALSE(result.warnings.empty());
}

TEST(GaussianKernel, ErrorsOnBadInput) {
  EXPECT_THROW(gaussian_kernel_adjacency(std::vector<DistanceEntry>{{0, 3, 1.0}}, 3), IndexError);
  EXPECT_THROW(gaussian_kernel_adjacency(std::vector<DistanceEntry>{{0, 1, -1.0}}, 3), ValueError);
}

TEST(GaussianKernel, DefaultSigmaIsPopulationStd) {
  const std::vector<DistanceEntry> d{{0, 1, 100.0}, {1, 2, 300.0}};
  EXPECT_DOUBLE_EQ(default_sigma(d), 100.0);
}

TEST(GaussianKernel, MonotoneInDistance) {
  KernelOptions opts;
  opts.sigma = 500.0;
  opts.epsilon = 0.0;
  double previous = 2.0;
  for (double dist = 0.0; dist <= 3000.0; dist += 50.0) {
    const auto a = gaussian_kernel_adjacency(std::vector<DistanceEntry>{{0, 1, dist}}, 2, opts);
    EXPECT_LE(a.adjacency(0, 1), previous);
    previous = a.adjacency(0, 1);
  }
}

TEST(SymmetrizeMax, Examples) {
  Matrix a(2, 2);
  a(0, 1) = 0.2;
  a(1, 0) = 0.7;
  const Matrix s = symmetrize_max(a);
  EXPECT_EQ(s(0, 1), 0.7);
  EXPECT_EQ(s(1, 0), 0.7);
  EXPECT_EQ(symmetrize_max(s), s);
  Matrix neg(2, 2);
  neg(0, 1) = -0.1;
  EXPECT_THROW(symmetrize_max(neg), ValueError);
}

TEST(SymmetrizeMax, MatchesElementwiseOracle) {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(5, 5, rng, 0.0, 1.0);
  const Matrix s = symmetrize_max(a);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(s(i, j), i == j ? 0.0 : std::max(a(i, j), a(j, i)));
    }
}

TEST(ScaledLaplacian, TwoNodePath) {
  Matrix a(2, 2);
  a(0, 1) = a(1, 0) = 1.0;
  const auto s = scaled_laplacian(a);
  EXPECT_NEAR(s.laplacian(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s.laplacian(0, 1), -1.0, 1e-15);
  EXPECT_NEAR(s.lambda_max, 2.0, 1e-9);
  EXPECT_NEAR(s.scaled(0, 0), 0.0, 1e-9);
  EXPECT_NEAR(s.scaled(0, 1), -1.0, 1e-9);
}

TEST(ScaledLaplacian, CompleteGraphK3) {
  Matrix a(3, 3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) a(i, i) = 0.0;
  const auto s = scaled_laplacian(a);
  EXPECT_NEAR(s.lambda_max, 1.5, 1e-9);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(s.scaled));
  for (double v : eig.eigenvalues()) {
    EXPECT_GE(v, -1.0 - 1e-8);
    EXPECT_LE(v, 1.0 + 1e-8);
  }
}

TEST(ScaledLaplacian, AllIsolatedIsIdentity) {
  const auto s = scaled_laplacian(Matrix(3, 3));
  EXPECT_EQ(s.laplacian, Matrix::identity(3));
  EXPECT_DOUBLE_EQ(s.lambda_max, 1.0);
  EXPECT_LE(max_abs_diff(s.scaled, Matrix::identity(3)), 1e-12);
}

TEST(ScaledLaplacian, SymmetricForSymmetricInput) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = scaled_laplacian(random_adjacency(8, rng));
    EXPECT_LE(max_abs_diff(s.scaled, s.scaled.transposed()), 1e-12);
  }
}

TEST(PowerIteration, MatchesDenseEigensolve) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const Matrix lap = normalized_laplacian(random_adjacency(n, rng));
    const auto pi = dominant_eigenvalue(lap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(lap));
    EXPECT_NEAR(pi.eigenvalue, eig.eigenvalues().maxCoeff(), 1e-7) << "n=" << n;
  }
}

TEST(Chebyshev, BasisRecurrenceHoldsExactly) {
  std::mt19937_64 rng(4);
  const TrafficGraph g(random_adjacency(6, rng), 4);
  const auto& t = g.cheb_basis();
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[0], Matrix::identity(6));
  EXPECT_EQ(t[1], g.scaled_laplacian());
  for (std::size_t k = 2; k < t.size(); ++k) {
    const Matrix two_lt = matmul(g.scaled_laplacian(), t[k - 1]);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(t[k](i, j), 2.0 * two_lt(i, j) - t[k - 2](i, j), 1e-12);
      }
  }
}

TEST(Chebyshev, RecurrenceOnVectors) {
  std::mt19937_64 rng(5);
  const TrafficGraph g(random_adjacency(7, rng), 5);
  const Matrix x = random_matrix(7, 1, rng);
  for (std::size_t k = 2; k <= 5; ++k) {
    const Matrix lhs = matmul(g.cheb_basis()[k], x);
    const Matrix prev = matmul(g.cheb_basis()[k - 1], x);
    const Matrix prev2 = matmul(g.cheb_basis()[k - 2], x);
    const Matrix l_prev = matmul(g.scaled_laplacian(), prev);
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_NEAR(lhs(i, 0), 2.0 * l_prev(i, 0) - prev2(i, 0), 1e-9);
    }
  }
}

TEST(ChebyshevConv, OrderZeroIdentityFilter) {
  std::mt19937_64 rng(6);
  const TrafficGraph g(random_adjacency(4, rng), 0);
  const ad::Tensor x = random_tensor({4, 1}, rng);
  const ad::Tensor theta({1, 1, 1}, {1.0});
  EXPECT_LE(max_abs_diff(chebyshev_graph_conv(x, g, theta).data(), x.data()), 0.0);
}

TEST(ChebyshevConv, TwoNodePathFirstOrder) {
  Matrix a(2, 2);
  a(0, 1) = a(1, 0) = 1.0;
  const TrafficGraph g(a, 1);
  const ad::Tensor out =
      chebyshev_graph_conv(ad::Tensor({2, 1}, {1.0, 0.0}), g, ad::Tensor({2, 1, 1}, {0.0, 1.0}));
  EXPECT_NEAR(out.at({0, 0}), 0.0, 1e-9);
  EXPECT_NEAR(out.at({1, 0}), -1.0, 1e-9);
}

TEST(ChebyshevConv, MatchesTripleLoopReference) {
  std::mt19937_64 rng(7);
  const std::size_t n = 4, k = 3, d_in = 3, d_out = 2;
  const TrafficGraph g(random_adjacency(n, rng, 0.8), k);
  const ad::Tensor x = random_tensor({n, d_in}, rng);
  const ad::Tensor theta = random_tensor({k + 1, d_in, d_out}, rng);
  const ad::Tensor out = chebyshev_graph_conv(x, g, theta);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < d_out; ++j) {
      double ref = 0.0;
      for (std::size_t i = 0; i < d_in; ++i)
        for (std::size_t kk = 0; kk <= k; ++kk)
          for (std::size_t u = 0; u < n; ++u) {
            ref += theta.at({kk, i, j}) * g.cheb_basis()[kk](v, u) * x.at({u, i});
          }
      EXPECT_NEAR(out.at({v, j}), ref, 1e-10);
    }
}

TEST(ChebyshevConv, PermutationEquivariant) {
  std::mt19937_64 rng(8);
  const std::size_t n = 6;
  const Matrix a = random_adjacency(n, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix pa(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pa(i, j) = a(perm[i], perm[j]);
  const ad::Tensor x = random_tensor({n, 3}, rng);
  std::vector<double> px;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) px.push_back(x.at({perm[i], c}));
  const ad::Tensor theta = random_tensor({4, 3, 2}, rng);
  const ad::Tensor y = chebyshev_graph_conv(x, TrafficGraph(a, 3), theta);
  const ad::Tensor py = chebyshev_graph_conv(ad::Tensor({n, 3}, px), TrafficGraph(pa, 3), theta);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(py.at({i, c}), y.at({perm[i], c}), 1e-10);
}

TEST(ChebyshevConv, OrderMismatchIsDimensionError) {
  std::mt19937_64 rng(9);
  const TrafficGraph g(random_adjacency(4, rng), 2);
  EXPECT_THROW(chebyshev_graph_conv(ad::Tensor::zeros({4, 2}), g, ad::Tensor::zeros({4, 2, 2})),
               DimensionError);
}

TEST(TrafficGraph, RejectsInvalidAdjacency) {
  Matrix asym(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(TrafficGraph(asym, 1), ValueError);
  Matrix diag(2, 2);
  diag(0, 0) = 1.0;
  EXPECT_THROW(TrafficGraph(diag, 1), ValueError);
}

TEST(TrafficGraph, KnnMaskKeepsSelfAndStrongest) {
  Matrix a(3, 3);
  a(0, 1) = a(1, 0) = 0.9;
  a(0, 2) = a(2, 0) = 0.2;
  const TrafficGraph g(a, 1);
  const ad::Mask m = g.knn_mask(1);
  EXPECT_TRUE(m(0, 0));
  EXPECT_TRUE(m(0, 1));
  EXPECT_FALSE(m(0, 2));
  EXPECT_TRUE(m(2, 2));
  EXPECT_TRUE(m(2, 0));
}

}  // namespace
}  // namespace sttn::graph
