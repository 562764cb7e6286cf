#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sttn/autodiff/tensor.hpp"

namespace sttn::ad {

// Boolean keep-mask over the last two axes of an attention logit tensor.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  static Mask all(std::size_t rows, std::size_t cols);
  bool operator()(std::size_t r, std::size_t c) const { return keep[r * cols + c] != 0; }
  bool all_true() const;
};

// Binary elementwise ops follow numpy broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// 1 - a
Tensor one_minus(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);

// (..., m, k) x (..., k, n); leading batch axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

// Softmax along the last axis. Masked entries get probability exactly 0; a
// fully masked row is a ContractError.
Tensor softmax(const Tensor& a, const Mask* mask = nullptr);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, const Shape& shape);
Tensor swap_axes(const Tensor& a, int axis0, int axis1);
Tensor transpose(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

Shape broadcast_shapes(const Shape& a, const Shape& b);

}  // namespace sttn::ad
