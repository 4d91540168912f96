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

#ifndef MIXEMB_OPS_H_
#define MIXEMB_OPS_H_

#include <functional>
#include <vector>

#include "mixemb/tensor.h"

namespace mixemb {

// Differentiable operation set. Binary elementwise ops accept equal
// shapes, a scalar on either side, or a 1-D vector broadcast across the
// rows of a 2-D matrix. Shape violations raise ShapeError naming the op.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// 2-D x 2-D, 1-D x 2-D (row vector) and 2-D x 1-D (column vector).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor log1p_op(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor clamp_min(const Tensor& a, double floor);

// sqrt(max(1 - c^2, 0)) with a finite (zero) gradient at |c| >= 1.
Tensor sin_from_cos(const Tensor& c);

// Normalizes along `axis` (0 for 1-D, rows for axis=1 on 2-D). A slice
// whose norm is below eps raises ValueError.
Tensor l2_normalize(const Tensor& a, int axis = -1, double eps = 1e-12);

// 1-D vectors only; scalar output.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// Softmax along `axis`; shift-invariant (max is subtracted per slice).
Tensor softmax(const Tensor& a, int axis = -1);

// axis = -1 reduces everything to a scalar.
Tensor sum(const Tensor& a, int axis = -1);
Tensor mean(const Tensor& a, int axis = -1);

Tensor concat(const std::vector<Tensor>& parts, int axis = 0);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor reshape(const Tensor& a, const std::vector<int>& shape);

// 1-D convolution over time. input (T x Cin), weight (K x Cin x Cout),
// stride 1, zero padding `pad` on both sides; output ((T+2p-K+1) x Cout).
Tensor conv1d(const Tensor& input, const Tensor& weight, int pad);

// Weighted overlap-add resynthesis of masked magnitudes with a fixed
// phase matrix; linear in `mag`, differentiable via the exact adjoint.
// mag is (T x bins) with bins = nfft/2+1; output is 1-D `out_len`.
Tensor istft_fixed_phase(const Tensor& mag, const std::vector<double>& phase,
                         int win_len, int hop, int nfft, int out_len);

// Max over coordinates of |g_auto - g_fd| / max(|g_auto|, |g_fd|, 1e-8)
// where g_fd is the central difference of f at x with step eps.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps);

}  // namespace mixemb

#endif  // MIXEMB_OPS_H_
