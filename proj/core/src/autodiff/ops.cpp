#include "sttn/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "sttn/errors.hpp"

namespace sttn::ad {

namespace {

using Backward = std::function<void(const TensorImpl&)>;

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs, Backward bw) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("op '") + op + "' produced a non-finite value");
    }
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  if (grad_enabled()) {
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
    if (needs) {
      auto node = std::make_shared<ComputeNode>();
      node->op = op;
      for (const auto& t : inputs) node->inputs.push_back(t.impl());
      node->backward = std::move(bw);
      impl->requires_grad = true;
      impl->node = std::move(node);
    }
  }
  return Tensor::from_impl(std::move(impl));
}

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw IndexError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

// For each linear index of `out`, the linear index of the broadcast source.
std::vector<std::size_t> broadcast_index(const Shape& in, const Shape& out) {
  const std::size_t n = numel(out);
  const std::size_t r = out.size();
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t ax_in = in.size() - 1 - i;
    const std::size_t ax_out = r - 1 - i;
    if (in[ax_in] != 1) stride[ax_out] = s;
    s *= in[ax_in];
  }
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t off = 0;
  for (std::size_t lin = 0; lin < n; ++lin) {
    idx[lin] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      ++counter[ax];
      off += stride[ax];
      if (counter[ax] < out[ax]) break;
      off -= stride[ax] * out[ax];
      counter[ax] = 0;
    }
  }
  return idx;
}

struct Broadcast {
  Shape shape;
  std::vector<std::size_t> ia;  // empty when a already has the output shape
  std::vector<std::size_t> ib;

  std::size_t a(std::size_t i) const { return ia.empty() ? i : ia[i]; }
  std::size_t b(std::size_t i) const { return ib.empty() ? i : ib[i]; }
};

Broadcast plan_broadcast(const Tensor& a, const Tensor& b) {
  Broadcast p;
  p.shape = broadcast_shapes(a.shape(), b.shape());
  if (a.shape() != p.shape) p.ia = broadcast_index(a.shape(), p.shape);
  if (b.shape() != p.shape) p.ib = broadcast_index(b.shape(), p.shape);
  return p;
}

template <class Fn>
Tensor unary(const char* op, const Tensor& a, Fn f,
             std::function<double(double x, double y)> dfdx) {
  const auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  TensorImpl* pa = a.impl().get();
  return make_result(op, a.shape(), std::move(out), {a}, [pa, dfdx](const TensorImpl& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      pa->grad[i] += o.grad[i] * dfdx(pa->data[i], o.data[i]);
    }
  });
}

// C[m,n] = A[m,k] B[k,n]
void gemm(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
          std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// gA[m,k] += gC[m,n] B[k,n]^T
void gemm_grad_a(const double* gC, const double* B, double* gA, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g = gC + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b = B + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += g[j] * b[j];
      gA[i * k + p] += acc;
    }
  }
}

// gB[k,n] += A[m,k]^T gC[m,n]
void gemm_grad_b(const double* A, const double* gC, double* gB, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g = gC + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      double* b = gB + p * n;
      for (std::size_t j = 0; j < n; ++j) b[j] += av * g[j];
    }
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit sp;
  for (std::size_t i = 0; i < axis; ++i) sp.outer *= s[i];
  sp.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

}  // namespace

Mask Mask::all(std::size_t rows, std::size_t cols) {
  return Mask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
}

bool Mask::all_true() const {
  return std::all_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; });
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast shapes " + shape_str(a) + " and " + shape_str(b));
    }
    out[r - 1 - i] = std::max(da, db);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto plan = plan_broadcast(a, b);
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(numel(plan.shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[plan.a(i)] + db[plan.b(i)];
  TensorImpl* pa = a.impl().get();
  TensorImpl* pb = b.impl().get();
  Shape shape = plan.shape;
  return make_result("add", std::move(shape), std::move(out), {a, b},
                     [pa, pb, plan = std::move(plan)](const TensorImpl& o) {
                       for (std::size_t i = 0; i < o.grad.size(); ++i) {
                         if (pa->requires_grad) pa->grad[plan.a(i)] += o.grad[i];
                         if (pb->requires_grad) pb->grad[plan.b(i)] += o.grad[i];
                       }
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  auto plan = plan_broadcast(a, b);
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(numel(plan.shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[plan.a(i)] - db[plan.b(i)];
  TensorImpl* pa = a.impl().get();
  TensorImpl* pb = b.impl().get();
  Shape shape = plan.shape;
  return make_result("sub", std::move(shape), std::move(out), {a, b},
                     [pa, pb, plan = std::move(plan)](const TensorImpl& o) {
                       for (std::size_t i = 0; i < o.grad.size(); ++i) {
                         if (pa->requires_grad) pa->grad[plan.a(i)] += o.grad[i];
                         if (pb->requires_grad) pb->grad[plan.b(i)] -= o.grad[i];
                       }
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto plan = plan_broadcast(a, b);
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(numel(plan.shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[plan.a(i)] * db[plan.b(i)];
  TensorImpl* pa = a.impl().get();
  TensorImpl* pb = b.impl().get();
  Shape shape = plan.shape;
  return make_result("mul", std::move(shape), std::move(out), {a, b},
                     [pa, pb, plan = std::move(plan)](const TensorImpl& o) {
                       for (std::size_t i = 0; i < o.grad.size(); ++i) {
                         const std::size_t ia = plan.a(i);
                         const std::size_t ib = plan.b(i);
                         if (pa->requires_grad) pa->grad[ia] += o.grad[i] * pb->data[ib];
                         if (pb->requires_grad) pb->grad[ib] += o.grad[i] * pa->data[ia];
                       }
                     });
}

Tensor scale(const Tensor& a, double s) {
  return unary("scale", a, [s](double x) { return s * x; },
               [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary("add_scalar", a, [s](double x) { return x + s; },
               [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& a) {
  return unary("one_minus", a, [](double x) { return 1.0 - x; },
               [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::fabs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(-2);
  const std::size_t k = a.dim(-1);
  const std::size_t n = b.dim(-1);
  if (b.dim(-2) != k) {
    throw DimensionError("matmul inner dimensions differ: " + shape_str(a.shape()) + " by " +
                         shape_str(b.shape()));
  }
  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  Shape batch;
  try {
    batch = broadcast_shapes(batch_a, batch_b);
  } catch (const DimensionError&) {
    throw DimensionError("matmul batch axes do not broadcast: " + shape_str(a.shape()) +
                         " by " + shape_str(b.shape()));
  }
  const auto ia = broadcast_index(batch_a, batch);
  const auto ib = broadcast_index(batch_b, batch);
  const std::size_t nb = numel(batch);

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(nb * m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t bi = 0; bi < nb; ++bi) {
    gemm(A + ia[bi] * m * k, B + ib[bi] * k * n, out.data() + bi * m * n, m, k, n);
  }

  TensorImpl* pa = a.impl().get();
  TensorImpl* pb = b.impl().get();
  return make_result("matmul", std::move(out_shape), std::move(out), {a, b},
                     [pa, pb, ia, ib, nb, m, k, n](const TensorImpl& o) {
                       for (std::size_t bi = 0; bi < nb; ++bi) {
                         const double* gC = o.grad.data() + bi * m * n;
                         if (pa->requires_grad) {
                           gemm_grad_a(gC, pb->data.data() + ib[bi] * k * n,
                                       pa->grad.data() + ia[bi] * m * k, m, k, n);
                         }
                         if (pb->requires_grad) {
                           gemm_grad_b(pa->data.data() + ia[bi] * m * k, gC,
                                       pb->grad.data() + ib[bi] * k * n, m, k, n);
                         }
                       }
                     });
}

Tensor softmax(const Tensor& a, const Mask* mask) {
  if (a.rank() < 1) throw DimensionError("softmax of a scalar");
  const std::size_t cols = a.dim(-1);
  const std::size_t mrows = a.rank() >= 2 ? a.dim(-2) : 1;
  if (mask && (mask->rows != mrows || mask->cols != cols)) {
    throw DimensionError("mask " + std::to_string(mask->rows) + "x" + std::to_string(mask->cols) +
                         " does not fit logits " + shape_str(a.shape()));
  }
  const auto x = a.data();
  const std::size_t rows = x.size() / cols;
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = out.data() + r * cols;
    const std::size_t mr = r % mrows;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask == nullptr || (*mask)(mr, c)) mx = std::max(mx, xr[c]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ContractError("softmax row " + std::to_string(mr) + " is fully masked");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask == nullptr || (*mask)(mr, c)) {
        yr[c] = std::exp(xr[c] - mx);
        total += yr[c];
      }
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= total;
  }
  TensorImpl* pa = a.impl().get();
  return make_result("softmax", a.shape(), std::move(out), {a}, [pa, cols](const TensorImpl& o) {
    const std::size_t rows = o.data.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.data.data() + r * cols;
      const double* g = o.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * g[c];
      double* ga = pa->grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) ga[c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const Shape& ref = parts.front().shape();
  const std::size_t ax = normalize_axis(axis, ref.size());
  Shape out_shape = ref;
  out_shape[ax] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == ax) || s[i] == ref[i];
    if (!ok) {
      throw DimensionError("concat shapes " + shape_str(ref) + " and " + shape_str(s) +
                           " differ off axis " + std::to_string(ax));
    }
    out_shape[ax] += s[ax];
  }
  const AxisSplit outer = split_at(out_shape, ax);
  std::vector<double> out(numel(out_shape));
  std::vector<std::size_t> widths;
  std::vector<TensorImpl*> impls;
  for (const auto& p : parts) {
    widths.push_back(p.shape()[ax] * outer.inner);
    impls.push_back(p.impl().get());
  }
  const std::size_t row = outer.extent * outer.inner;
  for (std::size_t o = 0; o < outer.outer; ++o) {
    std::size_t off = o * row;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const double* src = parts[p].data().data() + o * widths[p];
      std::copy(src, src + widths[p], out.begin() + static_cast<std::ptrdiff_t>(off));
      off += widths[p];
    }
  }
  return make_result("concat", std::move(out_shape), std::move(out), parts,
                     [impls, widths, outer, row](const TensorImpl& o) {
                       for (std::size_t b = 0; b < outer.outer; ++b) {
                         std::size_t off = b * row;
                         for (std::size_t p = 0; p < impls.size(); ++p) {
                           if (impls[p]->requires_grad) {
                             double* dst = impls[p]->grad.data() + b * widths[p];
                             for (std::size_t i = 0; i < widths[p]; ++i) dst[i] += o.grad[off + i];
                           }
                           off += widths[p];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  const std::size_t ax = normalize_axis(axis, a.rank());
  if (begin >= end || end > a.shape()[ax]) {
    throw IndexError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for axis " + std::to_string(ax) + " of " + shape_str(a.shape()));
  }
  const AxisSplit sp = split_at(a.shape(), ax);
  Shape out_shape = a.shape();
  out_shape[ax] = end - begin;
  const std::size_t w = (end - begin) * sp.inner;
  const std::size_t src_row = sp.extent * sp.inner;
  std::vector<double> out(sp.outer * w);
  const auto x = a.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    const double* src = x.data() + o * src_row + begin * sp.inner;
    std::copy(src, src + w, out.begin() + static_cast<std::ptrdiff_t>(o * w));
  }
  TensorImpl* pa = a.impl().get();
  const std::size_t first = begin * sp.inner;
  return make_result("slice", std::move(out_shape), std::move(out), {a},
                     [pa, sp, w, src_row, first](const TensorImpl& o) {
                       for (std::size_t b = 0; b < sp.outer; ++b) {
                         double* dst = pa->grad.data() + b * src_row + first;
                         for (std::size_t i = 0; i < w; ++i) dst[i] += o.grad[b * w + i];
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw DimensionError("cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  const auto x = a.data();
  TensorImpl* pa = a.impl().get();
  return make_result("reshape", std::move(shape), std::vector<double>(x.begin(), x.end()), {a},
                     [pa](const TensorImpl& o) {
                       for (std::size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i];
                     });
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  Shape merged;
  try {
    merged = broadcast_shapes(a.shape(), shape);
  } catch (const DimensionError&) {
    merged.clear();
  }
  if (merged != shape) {
    throw DimensionError("cannot broadcast " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  auto idx = broadcast_index(a.shape(), shape);
  const auto x = a.data();
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  TensorImpl* pa = a.impl().get();
  return make_result("broadcast_to", shape, std::move(out), {a},
                     [pa, idx = std::move(idx)](const TensorImpl& o) {
                       for (std::size_t i = 0; i < idx.size(); ++i) pa->grad[idx[i]] += o.grad[i];
                     });
}

Tensor swap_axes(const Tensor& a, int axis0, int axis1) {
  const std::size_t r = a.rank();
  const std::size_t a0 = normalize_axis(axis0, r);
  const std::size_t a1 = normalize_axis(axis1, r);
  const Shape& in = a.shape();
  Shape out_shape = in;
  std::swap(out_shape[a0], out_shape[a1]);

  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  std::vector<std::size_t> stride = in_stride;  // in-strides seen from output axes
  std::swap(stride[a0], stride[a1]);

  const std::size_t n = numel(out_shape);
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t off = 0;
  for (std::size_t lin = 0; lin < n; ++lin) {
    idx[lin] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      ++counter[ax];
      off += stride[ax];
      if (counter[ax] < out_shape[ax]) break;
      off -= stride[ax] * out_shape[ax];
      counter[ax] = 0;
    }
  }
  const auto x = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[idx[i]];
  TensorImpl* pa = a.impl().get();
  return make_result("swap_axes", std::move(out_shape), std::move(out), {a},
                     [pa, idx = std::move(idx)](const TensorImpl& o) {
                       for (std::size_t i = 0; i < idx.size(); ++i) pa->grad[idx[i]] += o.grad[i];
                     });
}

Tensor transpose(const Tensor& a) { return swap_axes(a, -2, -1); }

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  TensorImpl* pa = a.impl().get();
  return make_result("sum", {}, {total}, {a}, [pa](const TensorImpl& o) {
    const double g = o.grad[0];
    for (double& v : pa->grad) v += g;
  });
}

Tensor mean(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  const double n = static_cast<double>(a.numel());
  TensorImpl* pa = a.impl().get();
  return make_result("mean", {}, {total / n}, {a}, [pa, n](const TensorImpl& o) {
    const double g = o.grad[0] / n;
    for (double& v : pa->grad) v += g;
  });
}

}  // namespace sttn::ad
