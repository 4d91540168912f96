// Copyright (c) 2026 The mixemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mixemb/ops.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>

#include "mixemb/dsp.h"

namespace mixemb {

namespace {

// C (M x N) += or = A (M x K) * B (K x N)
void mm(const double* A, const double* B, double* C, int M, int K, int N,
        bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<size_t>(M) * N, 0.0);
  for (int i = 0; i < M; ++i) {
    const double* Arow = A + static_cast<size_t>(i) * K;
    double* Crow = C + static_cast<size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      double a = Arow[k];
      if (a == 0.0) continue;
      const double* Brow = B + static_cast<size_t>(k) * N;
      for (int j = 0; j < N; ++j) Crow[j] += a * Brow[j];
    }
  }
}

// C (M x K) += A (M x N) * B^T, B given as (K x N)
void mm_abt(const double* A, const double* B, double* C, int M, int N, int K) {
  for (int i = 0; i < M; ++i) {
    const double* Arow = A + static_cast<size_t>(i) * N;
    double* Crow = C + static_cast<size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const double* Brow = B + static_cast<size_t>(k) * N;
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += Arow[j] * Brow[j];
      Crow[k] += acc;
    }
  }
}

// C (K x N) += A^T * B, A given as (M x K), B as (M x N)
void mm_atb(const double* A, const double* B, double* C, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const double* Arow = A + static_cast<size_t>(i) * K;
    const double* Brow = B + static_cast<size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      double a = Arow[k];
      if (a == 0.0) continue;
      double* Crow = C + static_cast<size_t>(k) * N;
      for (int j = 0; j < N; ++j) Crow[j] += a * Brow[j];
    }
  }
}

enum class Broadcast { kSame, kAScalar, kBScalar, kARow, kBRow };

Broadcast resolve_broadcast(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.numel() == 1) return Broadcast::kAScalar;
  if (b.numel() == 1) return Broadcast::kBScalar;
  if (a.ndim() == 2 && b.ndim() == 1 && a.dim(1) == b.dim(0))
    return Broadcast::kBRow;
  if (b.ndim() == 2 && a.ndim() == 1 && b.dim(1) == a.dim(0))
    return Broadcast::kARow;
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// Index of the broadcast operand element feeding output element i.
struct BcIndex {
  Broadcast kind;
  int cols;
  int64_t a_index(int64_t i) const {
    if (kind == Broadcast::kAScalar) return 0;
    if (kind == Broadcast::kARow) return i % cols;
    return i;
  }
  int64_t b_index(int64_t i) const {
    if (kind == Broadcast::kBScalar) return 0;
    if (kind == Broadcast::kBRow) return i % cols;
    return i;
  }
};

BcIndex bc_index(Broadcast kind, const Tensor& a, const Tensor& b) {
  int cols = 0;
  if (kind == Broadcast::kBRow) cols = a.dim(1);
  if (kind == Broadcast::kARow) cols = b.dim(1);
  return BcIndex{kind, cols};
}

std::vector<int> out_shape(Broadcast kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case Broadcast::kAScalar:
    case Broadcast::kARow:
      return b.shape();
    default:
      return a.shape();
  }
}

using BinFn = double (*)(double, double);

Tensor binary_op(const char* name, const Tensor& a, const Tensor& b,
                 BinFn value_fn,
                 std::function<void(TensorNode&, const BcIndex&,
                                    const std::vector<double>&,
                                    const std::vector<double>&)>
                     backward) {
  Broadcast kind = resolve_broadcast(name, a, b);
  BcIndex idx = bc_index(kind, a, b);
  std::vector<int> shape = out_shape(kind, a, b);
  int64_t n = shape_numel(shape);
  std::vector<double> out(static_cast<size_t>(n));
  const auto& av = a.data();
  const auto& bv = b.data();
  for (int64_t i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = value_fn(av[idx.a_index(i)],
                                           bv[idx.b_index(i)]);
  auto an = a.node();
  auto bn = b.node();
  return make_op_result(
      std::move(shape), std::move(out), {an, bn},
      [idx, an, bn, backward](TensorNode& self) {
        backward(self, idx, an->value, bn->value);
      });
}

void accumulate_into(TensorNode* p, int64_t index, double v) {
  p->grad[static_cast<size_t>(index)] += v;
}

Tensor unary_op(const Tensor& a, double (*fn)(double),
                double (*dfn)(double /*x*/, double /*y*/)) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = fn(av[i]);
  auto an = a.node();
  return make_op_result(a.shape(), std::move(out), {an},
                        [an, dfn](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (size_t i = 0; i < self.value.size(); ++i)
                            an->grad[i] += self.grad[i] *
                                           dfn(an->value[i], self.value[i]);
                        });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](TensorNode& self, const BcIndex& idx, const std::vector<double>&,
         const std::vector<double>&) {
        TensorNode* pa = self.parents[0].get();
        TensorNode* pb = self.parents[1].get();
        int64_t n = self.numel();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pa, idx.a_index(i), self.grad[i]);
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pb, idx.b_index(i), self.grad[i]);
        }
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](TensorNode& self, const BcIndex& idx, const std::vector<double>&,
         const std::vector<double>&) {
        TensorNode* pa = self.parents[0].get();
        TensorNode* pb = self.parents[1].get();
        int64_t n = self.numel();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pa, idx.a_index(i), self.grad[i]);
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pb, idx.b_index(i), -self.grad[i]);
        }
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](TensorNode& self, const BcIndex& idx, const std::vector<double>& av,
         const std::vector<double>& bv) {
        TensorNode* pa = self.parents[0].get();
        TensorNode* pb = self.parents[1].get();
        int64_t n = self.numel();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pa, idx.a_index(i),
                            self.grad[i] * bv[idx.b_index(i)]);
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pb, idx.b_index(i),
                            self.grad[i] * av[idx.a_index(i)]);
        }
      });
}

Tensor divide(const Tensor& a, const Tensor& b) {
  return binary_op(
      "divide", a, b, [](double x, double y) { return x / y; },
      [](TensorNode& self, const BcIndex& idx, const std::vector<double>& av,
         const std::vector<double>& bv) {
        TensorNode* pa = self.parents[0].get();
        TensorNode* pb = self.parents[1].get();
        int64_t n = self.numel();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            accumulate_into(pa, idx.a_index(i),
                            self.grad[i] / bv[idx.b_index(i)]);
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            double y = bv[idx.b_index(i)];
            accumulate_into(pb, idx.b_index(i),
                            -self.grad[i] * av[idx.a_index(i)] / (y * y));
          }
        }
      });
}

Tensor scale(const Tensor& a, double c) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  auto an = a.node();
  return make_op_result(a.shape(), std::move(out), {an},
                        [an, c](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (size_t i = 0; i < self.value.size(); ++i)
                            an->grad[i] += self.grad[i] * c;
                        });
}

Tensor add_scalar(const Tensor& a, double c) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  auto an = a.node();
  return make_op_result(a.shape(), std::move(out), {an},
                        [an](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (size_t i = 0; i < self.value.size(); ++i)
                            an->grad[i] += self.grad[i];
                        });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  // Promote 1-D operands to a row / column matrix.
  int M, K, N;
  std::vector<int> result_shape;
  if (a.ndim() == 2 && b.ndim() == 2) {
    M = a.dim(0);
    K = a.dim(1);
    N = b.dim(1);
    if (b.dim(0) != K)
      throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()));
    result_shape = {M, N};
  } else if (a.ndim() == 1 && b.ndim() == 2) {
    M = 1;
    K = a.dim(0);
    N = b.dim(1);
    if (b.dim(0) != K)
      throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()));
    result_shape = {N};
  } else if (a.ndim() == 2 && b.ndim() == 1) {
    M = a.dim(0);
    K = a.dim(1);
    N = 1;
    if (b.dim(0) != K)
      throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()));
    result_shape = {M};
  } else {
    throw ShapeError("matmul: expects 1-D/2-D operands, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(M) * N);
  mm(a.data().data(), b.data().data(), out.data(), M, K, N, false);
  auto an = a.node();
  auto bn = b.node();
  return make_op_result(
      std::move(result_shape), std::move(out), {an, bn},
      [an, bn, M, K, N](TensorNode& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          // dA += G * B^T
          mm_abt(self.grad.data(), bn->value.data(), an->grad.data(), M, N, K);
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          // dB += A^T * G
          mm_atb(an->value.data(), self.grad.data(), bn->grad.data(), M, K, N);
        }
      });
}

Tensor transpose(const Tensor& a) {
  if (a.ndim() != 2)
    throw ShapeError("transpose: expects 2-D, got " + shape_str(a.shape()));
  int R = a.dim(0), C = a.dim(1);
  std::vector<double> out(static_cast<size_t>(R) * C);
  const auto& av = a.data();
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j)
      out[static_cast<size_t>(j) * R + i] = av[static_cast<size_t>(i) * C + j];
  auto an = a.node();
  return make_op_result({C, R}, std::move(out), {an},
                        [an, R, C](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (int i = 0; i < R; ++i)
                            for (int j = 0; j < C; ++j)
                              an->grad[static_cast<size_t>(i) * C + j] +=
                                  self.grad[static_cast<size_t>(j) * R + i];
                        });
}

Tensor tanh_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor log1p_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log1p(x); },
                  [](double x, double) { return 1.0 / (1.0 + x); });
}

Tensor sqrt_op(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor clamp_min(const Tensor& a, double floor) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = std::max(av[i], floor);
  auto an = a.node();
  return make_op_result(a.shape(), std::move(out), {an},
                        [an, floor](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (size_t i = 0; i < self.value.size(); ++i)
                            if (an->value[i] > floor)
                              an->grad[i] += self.grad[i];
                        });
}

Tensor sin_from_cos(const Tensor& c) {
  const auto& cv = c.data();
  std::vector<double> out(cv.size());
  for (size_t i = 0; i < cv.size(); ++i) {
    double s2 = 1.0 - cv[i] * cv[i];
    out[i] = s2 > 0.0 ? std::sqrt(s2) : 0.0;
  }
  auto cn = c.node();
  return make_op_result(c.shape(), std::move(out), {cn},
                        [cn](TensorNode& self) {
                          if (!cn->requires_grad) return;
                          cn->ensure_grad();
                          for (size_t i = 0; i < self.value.size(); ++i) {
                            double s = self.value[i];
                            if (s > 0.0)
                              cn->grad[i] += self.grad[i] * (-cn->value[i] / s);
                          }
                        });
}

namespace {

// Iterates over the slices implied by (shape, axis): a 1-D tensor is a
// single slice; a 2-D tensor yields rows (axis 1) or columns (axis 0).
struct SliceIter {
  int64_t count;   // number of slices
  int64_t length;  // elements per slice
  int64_t stride;  // stride between slice elements
  int64_t base_step;

  int64_t index(int64_t slice, int64_t i) const {
    return slice * base_step + i * stride;
  }
};

SliceIter make_slices(const char* op, const std::vector<int>& shape,
                      int axis) {
  if (shape.size() == 1) {
    if (axis != 0 && axis != -1)
      throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                       " out of range for shape " + shape_str(shape));
    return SliceIter{1, shape[0], 1, 0};
  }
  if (shape.size() == 2) {
    int R = shape[0], C = shape[1];
    if (axis == 1 || axis == -1) return SliceIter{R, C, 1, C};
    if (axis == 0) return SliceIter{C, R, C, 1};
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(shape));
  }
  throw ShapeError(std::string(op) + ": expects 1-D or 2-D, got " +
                   shape_str(shape));
}

}  // namespace

Tensor l2_normalize(const Tensor& a, int axis, double eps) {
  SliceIter it = make_slices("l2_normalize", a.shape(), axis);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  std::vector<double> norms(static_cast<size_t>(it.count));
  for (int64_t s = 0; s < it.count; ++s) {
    double ss = 0.0;
    for (int64_t i = 0; i < it.length; ++i) {
      double v = av[it.index(s, i)];
      ss += v * v;
    }
    double norm = std::sqrt(ss);
    if (norm < eps)
      throw ValueError("l2_normalize: slice norm " + std::to_string(norm) +
                       " below eps " + std::to_string(eps));
    norms[static_cast<size_t>(s)] = norm;
    for (int64_t i = 0; i < it.length; ++i)
      out[it.index(s, i)] = av[it.index(s, i)] / norm;
  }
  auto an = a.node();
  return make_op_result(
      a.shape(), std::move(out), {an},
      [an, it, norms](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int64_t s = 0; s < it.count; ++s) {
          double dot = 0.0;
          for (int64_t i = 0; i < it.length; ++i)
            dot += self.grad[it.index(s, i)] * self.value[it.index(s, i)];
          double inv = 1.0 / norms[static_cast<size_t>(s)];
          for (int64_t i = 0; i < it.length; ++i) {
            int64_t k = it.index(s, i);
            an->grad[k] += (self.grad[k] - self.value[k] * dot) * inv;
          }
        }
      });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 1 || b.ndim() != 1 || a.dim(0) != b.dim(0))
    throw ShapeError("cosine_similarity: expects equal-length 1-D vectors, "
                     "got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const auto& av = a.data();
  const auto& bv = b.data();
  double dot = 0.0, sa = 0.0, sb = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    sa += av[i] * av[i];
    sb += bv[i] * bv[i];
  }
  double na = std::sqrt(sa), nb = std::sqrt(sb);
  if (na < 1e-12 || nb < 1e-12)
    throw ValueError("cosine_similarity: vector norm below 1e-12");
  double cosv = dot / (na * nb);
  auto an = a.node();
  auto bn = b.node();
  return make_op_result(
      {1}, {cosv}, {an, bn},
      [an, bn, na, nb, cosv](TensorNode& self) {
        double g = self.grad[0];
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < an->value.size(); ++i)
            an->grad[i] += g * (bn->value[i] / (na * nb) -
                                cosv * an->value[i] / (na * na));
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < bn->value.size(); ++i)
            bn->grad[i] += g * (an->value[i] / (na * nb) -
                                cosv * bn->value[i] / (nb * nb));
        }
      });
}

Tensor softmax(const Tensor& a, int axis) {
  SliceIter it = make_slices("softmax", a.shape(), axis);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (int64_t s = 0; s < it.count; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < it.length; ++i)
      mx = std::max(mx, av[it.index(s, i)]);
    double denom = 0.0;
    for (int64_t i = 0; i < it.length; ++i) {
      double e = std::exp(av[it.index(s, i)] - mx);
      out[it.index(s, i)] = e;
      denom += e;
    }
    for (int64_t i = 0; i < it.length; ++i) out[it.index(s, i)] /= denom;
  }
  auto an = a.node();
  return make_op_result(
      a.shape(), std::move(out), {an},
      [an, it](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int64_t s = 0; s < it.count; ++s) {
          double dot = 0.0;
          for (int64_t i = 0; i < it.length; ++i)
            dot += self.grad[it.index(s, i)] * self.value[it.index(s, i)];
          for (int64_t i = 0; i < it.length; ++i) {
            int64_t k = it.index(s, i);
            an->grad[k] += self.value[k] * (self.grad[k] - dot);
          }
        }
      });
}

Tensor sum(const Tensor& a, int axis) {
  const auto& av = a.data();
  if (axis == -1) {
    double acc = 0.0;
    for (double v : av) acc += v;
    auto an = a.node();
    return make_op_result({1}, {acc}, {an}, [an](TensorNode& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (size_t i = 0; i < an->value.size(); ++i)
        an->grad[i] += self.grad[0];
    });
  }
  if (a.ndim() > 2 || (a.ndim() == 2 && axis != 0 && axis != 1) ||
      (a.ndim() == 1 && axis != 0))
    throw ShapeError("sum: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(a.shape()));
  // Reducing along `axis` leaves one value per remaining position: for 2-D,
  // axis=0 gives column sums (length C), axis=1 gives row sums (length R).
  SliceIter red = a.ndim() == 2
                      ? (axis == 0 ? SliceIter{a.dim(1), a.dim(0), a.dim(1), 1}
                                   : SliceIter{a.dim(0), a.dim(1), 1, a.dim(1)})
                      : SliceIter{1, a.dim(0), 1, 0};
  std::vector<double> out(static_cast<size_t>(red.count), 0.0);
  for (int64_t s = 0; s < red.count; ++s) {
    double acc = 0.0;
    for (int64_t i = 0; i < red.length; ++i) acc += av[red.index(s, i)];
    out[static_cast<size_t>(s)] = acc;
  }
  auto an = a.node();
  std::vector<int> shape = {static_cast<int>(red.count)};
  return make_op_result(std::move(shape), std::move(out), {an},
                        [an, red](TensorNode& self) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          for (int64_t s = 0; s < red.count; ++s)
                            for (int64_t i = 0; i < red.length; ++i)
                              an->grad[red.index(s, i)] +=
                                  self.grad[static_cast<size_t>(s)];
                        });
}

Tensor mean(const Tensor& a, int axis) {
  if (axis == -1) return scale(sum(a, -1), 1.0 / static_cast<double>(a.numel()));
  Tensor s = sum(a, axis);
  int64_t reduced = a.numel() / s.numel();
  return scale(s, 1.0 / static_cast<double>(reduced));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: empty input list");
  int nd = parts[0].ndim();
  for (const auto& p : parts)
    if (p.ndim() != nd)
      throw ShapeError("concat: mixed ranks");
  if (nd == 1 && (axis == 0 || axis == -1)) {
    int total = 0;
    for (const auto& p : parts) total += p.dim(0);
    std::vector<double> out;
    out.reserve(static_cast<size_t>(total));
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<int> offsets;
    int off = 0;
    for (const auto& p : parts) {
      offsets.push_back(off);
      off += p.dim(0);
      out.insert(out.end(), p.data().begin(), p.data().end());
      parents.push_back(p.node());
    }
    auto ps = parents;
    return make_op_result(
        {total}, std::move(out), std::move(parents),
        [ps, offsets](TensorNode& self) {
          for (size_t k = 0; k < ps.size(); ++k) {
            if (!ps[k]->requires_grad) continue;
            ps[k]->ensure_grad();
            for (size_t i = 0; i < ps[k]->value.size(); ++i)
              ps[k]->grad[i] +=
                  self.grad[static_cast<size_t>(offsets[k]) + i];
          }
        });
  }
  if (nd == 2 && axis == 0) {
    int C = parts[0].dim(1);
    int R = 0;
    for (const auto& p : parts) {
      if (p.dim(1) != C) throw ShapeError("concat: column count mismatch");
      R += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(R) * C);
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<int64_t> offsets;
    int64_t off = 0;
    for (const auto& p : parts) {
      offsets.push_back(off);
      off += p.numel();
      out.insert(out.end(), p.data().begin(), p.data().end());
      parents.push_back(p.node());
    }
    auto ps = parents;
    return make_op_result(
        {R, C}, std::move(out), std::move(parents),
        [ps, offsets](TensorNode& self) {
          for (size_t k = 0; k < ps.size(); ++k) {
            if (!ps[k]->requires_grad) continue;
            ps[k]->ensure_grad();
            for (size_t i = 0; i < ps[k]->value.size(); ++i)
              ps[k]->grad[i] +=
                  self.grad[static_cast<size_t>(offsets[k]) + i];
          }
        });
  }
  throw ShapeError("concat: unsupported rank/axis combination");
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  if (start < 0 || len < 0)
    throw ShapeError("slice: negative start/len");
  if (a.ndim() == 1) {
    if (axis != 0 && axis != -1)
      throw ShapeError("slice: axis out of range for 1-D input");
    if (start + len > a.dim(0))
      throw ShapeError("slice: range [" + std::to_string(start) + "," +
                       std::to_string(start + len) + ") exceeds length " +
                       std::to_string(a.dim(0)));
    std::vector<double> out(a.data().begin() + start,
                            a.data().begin() + start + len);
    auto an = a.node();
    return make_op_result({len}, std::move(out), {an},
                          [an, start, len](TensorNode& self) {
                            if (!an->requires_grad) return;
                            an->ensure_grad();
                            for (int i = 0; i < len; ++i)
                              an->grad[static_cast<size_t>(start + i)] +=
                                  self.grad[static_cast<size_t>(i)];
                          });
  }
  if (a.ndim() == 2) {
    int R = a.dim(0), C = a.dim(1);
    if (axis == 0) {
      if (start + len > R) throw ShapeError("slice: row range out of bounds");
      std::vector<double> out(a.data().begin() + static_cast<size_t>(start) * C,
                              a.data().begin() +
                                  static_cast<size_t>(start + len) * C);
      auto an = a.node();
      return make_op_result(
          {len, C}, std::move(out), {an},
          [an, start, len, C](TensorNode& self) {
            if (!an->requires_grad) return;
            an->ensure_grad();
            for (size_t i = 0; i < static_cast<size_t>(len) * C; ++i)
              an->grad[static_cast<size_t>(start) * C + i] += self.grad[i];
          });
    }
    if (axis == 1 || axis == -1) {
      if (start + len > C)
        throw ShapeError("slice: column range out of bounds");
      std::vector<double> out(static_cast<size_t>(R) * len);
      const auto& av = a.data();
      for (int r = 0; r < R; ++r)
        for (int j = 0; j < len; ++j)
          out[static_cast<size_t>(r) * len + j] =
              av[static_cast<size_t>(r) * C + start + j];
      auto an = a.node();
      return make_op_result(
          {R, len}, std::move(out), {an},
          [an, start, len, R, C](TensorNode& self) {
            if (!an->requires_grad) return;
            an->ensure_grad();
            for (int r = 0; r < R; ++r)
              for (int j = 0; j < len; ++j)
                an->grad[static_cast<size_t>(r) * C + start + j] +=
                    self.grad[static_cast<size_t>(r) * len + j];
          });
    }
    throw ShapeError("slice: axis out of range for 2-D input");
  }
  throw ShapeError("slice: expects 1-D or 2-D input");
}

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  auto an = a.node();
  return make_op_result(shape, a.data(), {an}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.value.size(); ++i)
      an->grad[i] += self.grad[i];
  });
}

Tensor conv1d(const Tensor& input, const Tensor& weight, int pad) {
  if (input.ndim() != 2)
    throw ShapeError("conv1d: input must be 2-D (T x Cin), got " +
                     shape_str(input.shape()));
  if (weight.ndim() != 3)
    throw ShapeError("conv1d: weight must be 3-D (K x Cin x Cout), got " +
                     shape_str(weight.shape()));
  int T = input.dim(0), Cin = input.dim(1);
  int K = weight.dim(0), WCin = weight.dim(1), Cout = weight.dim(2);
  if (WCin != Cin)
    throw ShapeError("conv1d: input channels " + std::to_string(Cin) +
                     " vs weight channels " + std::to_string(WCin));
  if (pad < 0) throw ShapeError("conv1d: negative padding");
  int Tout = T + 2 * pad - K + 1;
  if (Tout <= 0)
    throw ShapeError("conv1d: kernel " + std::to_string(K) +
                     " longer than padded input " + std::to_string(T + 2 * pad));

  // im2col: patches (Tout x K*Cin), then one matmul with (K*Cin x Cout).
  int KC = K * Cin;
  auto patches = std::make_shared<std::vector<double>>(
      static_cast<size_t>(Tout) * KC, 0.0);
  const auto& in = input.data();
  for (int t = 0; t < Tout; ++t) {
    double* prow = patches->data() + static_cast<size_t>(t) * KC;
    for (int k = 0; k < K; ++k) {
      int src = t + k - pad;
      if (src < 0 || src >= T) continue;
      std::memcpy(prow + static_cast<size_t>(k) * Cin,
                  in.data() + static_cast<size_t>(src) * Cin,
                  sizeof(double) * static_cast<size_t>(Cin));
    }
  }
  std::vector<double> out(static_cast<size_t>(Tout) * Cout);
  mm(patches->data(), weight.data().data(), out.data(), Tout, KC, Cout, false);
  auto in_node = input.node();
  auto w_node = weight.node();
  return make_op_result(
      {Tout, Cout}, std::move(out), {in_node, w_node},
      [in_node, w_node, patches, T, Cin, K, Cout, Tout, pad,
       KC](TensorNode& self) {
        if (w_node->requires_grad) {
          w_node->ensure_grad();
          // dW += patches^T * G
          mm_atb(patches->data(), self.grad.data(), w_node->grad.data(), Tout,
                 KC, Cout);
        }
        if (in_node->requires_grad) {
          in_node->ensure_grad();
          // dPatches = G * W^T, scattered back over the input frames.
          std::vector<double> dpatch(static_cast<size_t>(Tout) * KC, 0.0);
          mm_abt(self.grad.data(), w_node->value.data(), dpatch.data(), Tout,
                 Cout, KC);
          for (int t = 0; t < Tout; ++t) {
            const double* prow = dpatch.data() + static_cast<size_t>(t) * KC;
            for (int k = 0; k < K; ++k) {
              int src = t + k - pad;
              if (src < 0 || src >= T) continue;
              double* grow =
                  in_node->grad.data() + static_cast<size_t>(src) * Cin;
              const double* gsrc = prow + static_cast<size_t>(k) * Cin;
              for (int c = 0; c < Cin; ++c) grow[c] += gsrc[c];
            }
          }
        }
      });
}

Tensor istft_fixed_phase(const Tensor& mag, const std::vector<double>& phase,
                         int win_len, int hop, int nfft, int out_len) {
  if (mag.ndim() != 2)
    throw ShapeError("istft_fixed_phase: mag must be 2-D, got " +
                     shape_str(mag.shape()));
  int T = mag.dim(0);
  int bins = mag.dim(1);
  if (bins != nfft / 2 + 1)
    throw ShapeError("istft_fixed_phase: bins " + std::to_string(bins) +
                     " != nfft/2+1 for nfft " + std::to_string(nfft));
  if (phase.size() != mag.data().size())
    throw ShapeError("istft_fixed_phase: phase size mismatch");

  std::vector<double> window = hann_window(win_len);
  // Squared-window overlap sum; denominator of the WOLA normalization.
  std::vector<double> wsum(static_cast<size_t>(out_len), 0.0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < win_len; ++n) {
      int m = t * hop + n;
      if (m < out_len) wsum[static_cast<size_t>(m)] += window[n] * window[n];
    }
  for (auto& w : wsum) w = std::max(w, 1e-8);

  const auto& mv = mag.data();
  std::vector<double> acc(static_cast<size_t>(out_len), 0.0);
  std::vector<std::complex<double>> spec(static_cast<size_t>(nfft));
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < bins; ++f) {
      size_t i = static_cast<size_t>(t) * bins + f;
      spec[static_cast<size_t>(f)] =
          std::polar(mv[i], phase[i]);
    }
    for (int f = bins; f < nfft; ++f)
      spec[static_cast<size_t>(f)] = std::conj(spec[static_cast<size_t>(nfft - f)]);
    fft_inplace(spec, /*inverse=*/true);
    for (int n = 0; n < win_len; ++n) {
      int m = t * hop + n;
      if (m < out_len)
        acc[static_cast<size_t>(m)] +=
            window[n] * spec[static_cast<size_t>(n)].real();
    }
  }
  std::vector<double> out(static_cast<size_t>(out_len));
  for (int m = 0; m < out_len; ++m)
    out[static_cast<size_t>(m)] = acc[static_cast<size_t>(m)] / wsum[static_cast<size_t>(m)];

  auto mn = mag.node();
  auto phase_copy = std::make_shared<std::vector<double>>(phase);
  auto wsum_copy = std::make_shared<std::vector<double>>(std::move(wsum));
  return make_op_result(
      {out_len}, std::move(out), {mn},
      [mn, phase_copy, wsum_copy, T, bins, win_len, hop, nfft,
       out_len](TensorNode& self) {
        if (!mn->requires_grad) return;
        mn->ensure_grad();
        std::vector<double> window = hann_window(win_len);
        std::vector<std::complex<double>> buf(static_cast<size_t>(nfft));
        for (int t = 0; t < T; ++t) {
          std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
          for (int n = 0; n < win_len; ++n) {
            int m = t * hop + n;
            if (m < out_len)
              buf[static_cast<size_t>(n)] =
                  window[n] * self.grad[static_cast<size_t>(m)] /
                  (*wsum_copy)[static_cast<size_t>(m)];
          }
          fft_inplace(buf, /*inverse=*/false);
          for (int f = 0; f < bins; ++f) {
            size_t i = static_cast<size_t>(t) * bins + f;
            double cf = (f == 0 || f == nfft / 2) ? 1.0 : 2.0;
            std::complex<double> e =
                std::polar(1.0, (*phase_copy)[i]);
            mn->grad[i] += cf / nfft *
                           (e * std::conj(buf[static_cast<size_t>(f)])).real();
          }
        }
      });
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps) {
  if (eps < 1e-7 || eps > 1e-4)
    throw ValueError("grad_check: eps " + std::to_string(eps) +
                     " outside [1e-7, 1e-4]");
  Tensor xg(x.shape(), x.data(), /*requires_grad=*/true);
  Tensor y = f(xg);
  if (y.numel() != 1)
    throw ShapeError("grad_check: f must be scalar-valued, got shape " +
                     shape_str(y.shape()));
  if (!std::isfinite(y.item()))
    throw ValueError("grad_check: f(x) is not finite");
  y.backward();
  std::vector<double> g_auto = xg.grad();

  std::vector<double> base = x.data();
  double max_rel = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    std::vector<double> lo = base, hi = base;
    hi[i] += eps;
    lo[i] -= eps;
    double fp = f(Tensor(x.shape(), hi, false)).item();
    double fm = f(Tensor(x.shape(), lo, false)).item();
    double g_fd = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::fabs(g_auto[i]), std::fabs(g_fd), 1e-8});
    max_rel = std::max(max_rel, std::fabs(g_auto[i] - g_fd) / denom);
  }
  return max_rel;
}

}  // namespace mixemb
