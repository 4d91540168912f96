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

#ifndef MIXEMB_OBJECTIVES_H_
#define MIXEMB_OBJECTIVES_H_

#include <vector>

#include "mixemb/dsp.h"
#include "mixemb/ops.h"
#include "mixemb/wave.h"

namespace mixemb {

// Additive angular margin classification head: one unit-norm weight row
// per identity, scale s, margin m (radians).
struct ArcFaceHead {
  Tensor class_weights;  // K x D, rows unit norm
  double scale = 30.0;
  double margin = 0.5;
};

ArcFaceHead make_arcface_head(int n_classes, int embed_dim, double scale,
                              double margin, uint64_t seed);

// Mean cross-entropy over s*cos(theta_j) logits with the target angle
// widened by the margin. Differentiable w.r.t. embeddings and weights;
// weights are re-normalized inside the graph. The margin is applied via
// cos(t+m) = cos t cos m - sin t sin m, which keeps the aligned case
// (cos t == 1) exact. |cos theta_y| > 1 beyond 1e-9 raises ValueError.
Tensor arcface_loss(const std::vector<Tensor>& embeddings,
                    const std::vector<int>& labels, const ArcFaceHead& head);

// Restore the unit-norm row invariant after an optimizer step.
void renormalize_rows(Tensor& weights);

struct Assignment {
  std::vector<int> permutation;  // predicted index -> target index
  double total_cost = 0.0;
};

// Minimum-cost perfect matching on a square, finite cost matrix.
// Ties break toward the lexicographically smallest permutation.
Assignment hungarian(const Mat& cost);

// cost[i][j] = 1 - cos(pred_i, target_j); Hungarian assignment; loss is
// the matched cost divided by n_sp. The assignment is held constant in
// the backward pass.
struct PitResult {
  Tensor loss;
  Assignment assignment;
};
PitResult pit_cosine_loss(const std::vector<Tensor>& pred,
                          const std::vector<Tensor>& targets);

// Scale-invariant signal-to-distortion ratio in dB, capped at +120.
double si_sdr(const Waveform& est, const Waveform& ref);
inline constexpr double kSiSdrCapDb = 120.0;

// Differentiable negative SI-SDR against a fixed reference, with the
// error floor 1e-12*||target||^2 applied smoothly (additively).
Tensor si_sdr_loss(const Tensor& est, const std::vector<double>& ref);

}  // namespace mixemb

#endif  // MIXEMB_OBJECTIVES_H_
