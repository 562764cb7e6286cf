#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sttn/autodiff/gradcheck.hpp"
#include "sttn/autodiff/ops.hpp"
#include "sttn/errors.hpp"
#include "sttn/train/metrics.hpp"

namespace sttn::ad {
namespace {

using sttn::testing::max_abs_diff;
using sttn::testing::random_tensor;

TEST(Tensor, RejectsSizeMismatchAndZeroExtent) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(Tensor({0, 3}, {}), DimensionError);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.dim(-1), 3u);
  EXPECT_DOUBLE_EQ(t.at({1, 2}), 6.0);
}

TEST(Tensor, NonFiniteOutputIsNumericError) {
  const Tensor big({1}, {1e308});
  EXPECT_THROW(scale(big, 10.0), NumericError);
  EXPECT_THROW(Tensor({1}, {NAN}), NumericError);
}

TEST(Ops, ElementwiseBroadcasting) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3}, {10, 20, 30});
  const Tensor c = add(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 3}));
  EXPECT_DOUBLE_EQ(c.at({1, 2}), 36.0);
  const Tensor col({2, 1}, {2, 3});
  EXPECT_DOUBLE_EQ(mul(a, col).at({1, 0}), 12.0);
  EXPECT_THROW(add(a, Tensor({2}, {1, 2})), DimensionError);
}

TEST(Ops, MatmulShapeErrorNamesBothShapes) {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(shape_str({2, 3})), std::string::npos) << msg;
    EXPECT_NE(msg.find(shape_str({4, 5})), std::string::npos) << msg;
  }
}

TEST(Ops, MatmulBatchBroadcastMatchesLoop) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({3, 2, 4}, rng);
  const Tensor b = random_tensor({4, 5}, rng);
  const Tensor c = matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{3, 2, 5}));
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double ref = 0.0;
        for (std::size_t k = 0; k < 4; ++k) ref += a.at({s, i, k}) * b.at({k, j});
        EXPECT_NEAR(c.at({s, i, j}), ref, 1e-14);
      }
}

TEST(Ops, MatmulDistributesOverAddition) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = random_tensor({4, 6}, rng);
    const Tensor b = random_tensor({6, 3}, rng);
    const Tensor c = random_tensor({6, 3}, rng);
    const Tensor lhs = matmul(a, add(b, c));
    const Tensor rhs = add(matmul(a, b), matmul(a, c));
    EXPECT_LE(max_abs_diff(lhs.data(), rhs.data()), 1e-10);
  }
}

TEST(Ops, SoftmaxRowsAreStochastic) {
  std::mt19937_64 rng(3);
  const Tensor logits = random_tensor({5, 7}, rng, false, -30.0, 30.0);
  const Tensor s = softmax(logits);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GE(s.at({r, c}), 0.0);
      total += s.at({r, c});
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Ops, SoftmaxKnownValues) {
  const Tensor s = softmax(Tensor({1, 2}, {0.0, std::log(3.0)}));
  EXPECT_NEAR(s.at({0, 0}), 0.25, 1e-15);
  EXPECT_NEAR(s.at({0, 1}), 0.75, 1e-15);
  // Max subtraction keeps huge logits finite.
  const Tensor big = softmax(Tensor({1, 2}, {1000.0, 1000.0}));
  EXPECT_DOUBLE_EQ(big.at({0, 0}), 0.5);
}

TEST(Ops, SoftmaxMaskZeroesEntriesAndRejectsEmptyRows) {
  Mask mask = Mask::all(2, 3);
  mask.keep[1] = 0;
  const Tensor s = softmax(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), &mask);
  EXPECT_EQ(s.at({0, 1}), 0.0);
  EXPECT_NEAR(s.at({0, 0}) + s.at({0, 2}), 1.0, 1e-15);
  Mask dead = Mask::all(2, 3);
  dead.keep[3] = dead.keep[4] = dead.keep[5] = 0;
  EXPECT_THROW(softmax(Tensor::zeros({2, 3}), &dead), ContractError);
}

TEST(Ops, AllTrueMaskIsBitwiseNoOp) {
  std::mt19937_64 rng(4);
  const Tensor logits = random_tensor({3, 4, 4}, rng, false, -5.0, 5.0);
  const Mask mask = Mask::all(4, 4);
  EXPECT_TRUE(bitwise_equal(softmax(logits), softmax(logits, &mask)));
}

TEST(Ops, ConcatSliceReshapeSwap) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {5, 6});
  const Tensor c = concat({a, b}, -1);
  EXPECT_EQ(c.shape(), (Shape{2, 3}));
  EXPECT_DOUBLE_EQ(c.at({1, 2}), 6.0);
  EXPECT_THROW(concat({a, Tensor::zeros({3, 1})}, -1), DimensionError);
  const Tensor s = slice(c, 1, 1, 3);
  EXPECT_EQ(s.shape(), (Shape{2, 2}));
  EXPECT_DOUBLE_EQ(s.at({0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(reshape(c, {3, 2}).at({2, 1}), 6.0);
  const Tensor t = transpose(a);
  EXPECT_DOUBLE_EQ(t.at({0, 1}), 3.0);
  const Tensor x({2, 3, 4}, std::vector<double>(24, 0.0));
  EXPECT_EQ(swap_axes(x, 0, 2).shape(), (Shape{4, 3, 2}));
}

TEST(Backward, SumGivesOnes) {
  const Tensor x({3}, {1, 2, 3}, true);
  backward(sum(x));
  ASSERT_TRUE(x.has_grad());
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SquareGivesTwoX) {
  const Tensor x({2}, {1, 2}, true);
  backward(sum(mul(x, x)));
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 4.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  const Tensor x({2}, {1, 2}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), ContractError);
}

TEST(Backward, SecondCallOnSameLossIsContractError) {
  const Tensor x({2}, {1, 2}, true);
  const Tensor loss = sum(square(x));
  backward(loss);
  EXPECT_THROW(backward(loss), ContractError);
}

TEST(Backward, EveryParticipatingLeafGetsGrad) {
  std::mt19937_64 rng(5);
  const Tensor w = random_tensor({3, 3}, rng, true);
  const Tensor b = random_tensor({3}, rng, true);
  const Tensor unused = random_tensor({2}, rng, true);
  const Tensor x = random_tensor({4, 3}, rng);
  backward(mean(relu(add(matmul(x, w), b))));
  EXPECT_TRUE(w.has_grad());
  EXPECT_TRUE(b.has_grad());
  EXPECT_FALSE(unused.has_grad());
  EXPECT_FALSE(x.has_grad());
}

TEST(Backward, NoGradGuardRecordsNothing) {
  const Tensor x({2}, {1, 2}, true);
  Tensor y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = square(x);
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(y.is_leaf());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, ReluDerivativeAtZeroIsZero) {
  const Tensor x({3}, {-1.0, 0.0, 2.0}, true);
  backward(sum(relu(x)));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 1.0);
}

TEST(Backward, LeafGradsAccumulateUntilZeroed) {
  const Tensor x({1}, {3.0}, true);
  backward(sum(scale(x, 2.0)));
  backward(sum(scale(x, 5.0)));
  EXPECT_EQ(x.grad()[0], 7.0);
  Tensor handle = x;
  handle.zero_grad();
  backward(sum(scale(x, 5.0)));
  EXPECT_EQ(x.grad()[0], 5.0);
}

TEST(Backward, ForwardIsBitwiseDeterministic) {
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor({8, 16}, rng);
  const Tensor b = random_tensor({16, 8}, rng);
  EXPECT_TRUE(bitwise_equal(softmax(matmul(a, b)), softmax(matmul(a, b))));
}

// Each primitive is probed at a random point away from kinks.
struct PrimitiveCase {
  const char* name;
  std::function<Tensor(const Tensor&, const Tensor&)> fn;
  Shape a_shape;
  Shape b_shape;
};

class PrimitiveGradient : public ::testing::TestWithParam<int> {};

std::vector<PrimitiveCase> primitive_cases() {
  return {
      {"add", [](auto& a, auto& b) { return add(a, b); }, {3, 4}, {4}},
      {"sub", [](auto& a, auto& b) { return sub(a, b); }, {3, 4}, {3, 1}},
      {"mul", [](auto& a, auto& b) { return mul(a, b); }, {2, 3, 4}, {3, 4}},
      {"matmul", [](auto& a, auto& b) { return matmul(a, b); }, {2, 3, 4}, {4, 5}},
      {"matmul_batched", [](auto& a, auto& b) { return matmul(a, b); }, {2, 3, 4}, {2, 4, 2}},
      {"relu", [](auto& a, auto& b) { return mul(relu(a), b); }, {3, 4}, {3, 4}},
      {"sigmoid", [](auto& a, auto& b) { return mul(sigmoid(a), b); }, {3, 4}, {3, 4}},
      {"softmax", [](auto& a, auto& b) { return mul(softmax(a), b); }, {3, 5}, {3, 5}},
      {"abs", [](auto& a, auto& b) { return mul(abs(a), b); }, {3, 4}, {3, 4}},
      {"square", [](auto& a, auto& b) { return mul(square(a), b); }, {3, 4}, {3, 4}},
      {"one_minus", [](auto& a, auto& b) { return mul(one_minus(a), b); }, {3, 4}, {3, 4}},
      {"scale_shift", [](auto& a, auto& b) { return add(add_scalar(scale(a, -2.5), 0.3), b); },
       {3, 4}, {3, 4}},
      {"concat", [](auto& a, auto& b) { return square(concat({a, b}, 0)); }, {2, 4}, {3, 4}},
      {"slice", [](auto& a, auto& b) { return mul(slice(a, 1, 1, 3), b); }, {3, 4}, {3, 2}},
      {"reshape", [](auto& a, auto& b) { return mul(reshape(a, {4, 3}), b); }, {3, 4}, {4, 3}},
      {"broadcast_to", [](auto& a, auto& b) { return mul(broadcast_to(a, {2, 3, 4}), b); },
       {3, 1}, {2, 3, 4}},
      {"swap_axes", [](auto& a, auto& b) { return mul(swap_axes(a, 0, 2), b); }, {2, 3, 4},
       {4, 3, 2}},
      {"transpose", [](auto& a, auto& b) { return matmul(transpose(a), b); }, {3, 4}, {3, 2}},
      {"mean", [](auto& a, auto& b) { return mul(mean(square(a)), b); }, {3, 4}, {2}},
  };
}

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const auto c = primitive_cases().at(static_cast<std::size_t>(GetParam()));
  std::mt19937_64 rng(100 + GetParam());
  // Magnitudes in [0.2, 1] with random signs keep relu/abs away from 0.
  auto away_from_zero = [&](Shape shape) {
    Tensor t = random_tensor(std::move(shape), rng, true, 0.2, 1.0);
    std::bernoulli_distribution flip(0.5);
    for (double& v : t.mutable_data()) v = flip(rng) ? -v : v;
    return t;
  };
  const Tensor a = away_from_zero(c.a_shape);
  const Tensor b = away_from_zero(c.b_shape);
  const Tensor weights = random_tensor(c.fn(a, b).detach().shape(), rng);
  const std::vector<NamedTensor> params{{"a", a}, {"b", b}};
  const double err = finite_difference_check(
      [&] { return sum(mul(c.fn(a, b), weights)); }, params, 1e-6);
  EXPECT_LT(err, 1e-6) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient,
                         ::testing::Range(0, static_cast<int>(primitive_cases().size())),
                         [](const auto& info) {
                           return std::string(primitive_cases()[info.param].name);
                         });

TEST(GradCheck, QuadraticAtThree) {
  const Tensor w({1}, {3.0}, true);
  const std::vector<NamedTensor> params{{"w", w}};
  const auto report = gradient_check([&] { return sum(square(w)); }, params, 1e-6);
  EXPECT_NEAR(report.worst_analytic, 6.0, 0.0);
  EXPECT_LT(report.max_relative_error, 1e-9);
}

TEST(GradCheck, OneLayerReluNetTenParams) {
  std::mt19937_64 rng(7);
  const Tensor w = random_tensor({3, 2}, rng, true);
  const Tensor b = random_tensor({2}, rng, true);
  const Tensor v = random_tensor({2, 1}, rng, true);
  const Tensor x = random_tensor({6, 3}, rng);
  const std::vector<NamedTensor> params{{"w", w}, {"b", b}, {"v", v}};
  const auto report =
      gradient_check([&] { return mean(matmul(relu(add(matmul(x, w), b)), v)); }, params, 1e-6);
  EXPECT_EQ(report.entries, 10u);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(GradCheck, MaeOfSoftmax) {
  std::mt19937_64 rng(8);
  const Tensor w = random_tensor({4, 3}, rng, true);
  const Tensor x = random_tensor({5, 4}, rng);
  const Tensor t = random_tensor({5, 3}, rng, false, 0.0, 1.0);
  const std::vector<NamedTensor> params{{"w", w}};
  const double err = finite_difference_check(
      [&] { return train::mae_loss(softmax(matmul(x, w)), t); }, params, 1e-6);
  EXPECT_LT(err, 1e-4);
}

TEST(GradCheck, StepOutsideRangeIsValueError) {
  const Tensor w({1}, {1.0}, true);
  const std::vector<NamedTensor> params{{"w", w}};
  auto fn = [&] { return sum(w); };
  EXPECT_THROW(gradient_check(fn, params, 1e-3), ValueError);
  EXPECT_THROW(gradient_check(fn, params, 1e-9), ValueError);
}

TEST(GradCheck, NondeterministicFunctionIsOracleError) {
  const Tensor w({1}, {1.0}, true);
  const std::vector<NamedTensor> params{{"w", w}};
  int calls = 0;
  EXPECT_THROW(gradient_check(
                   [&] {
                     ++calls;
                     return add_scalar(sum(w), 1e-3 * calls);
                   },
                   params, 1e-6),
               OracleError);
}

}  // namespace
}  // namespace sttn::ad
