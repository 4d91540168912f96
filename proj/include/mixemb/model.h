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

#ifndef MIXEMB_MODEL_H_
#define MIXEMB_MODEL_H_

#include <string>
#include <utility>
#include <vector>

#include "mixemb/features.h"
#include "mixemb/ops.h"

namespace mixemb {

struct ConvBlock {
  Tensor weight;  // K x Cin x Cout
  Tensor bias;    // Cout
};

// Attentive statistics pooling + projection head.
struct AspHead {
  Tensor att_w;   // C x A
  Tensor att_b;   // A
  Tensor att_v;   // A
  Tensor proj_w;  // 2C x D
  Tensor proj_b;  // D
};

struct EncoderConfig {
  int n_mels = 40;
  int channels = 64;
  int depth = 4;
  int kernel = 3;
  int attn_dim = 32;
  int embed_dim = 32;
};

// Shared conv trunk plus one head (teacher) or n_sp heads (student).
struct EncoderModel {
  EncoderConfig cfg;
  std::vector<ConvBlock> trunk;
  std::vector<AspHead> heads;
  int freeze_depth = 0;
};

EncoderModel make_encoder(const EncoderConfig& cfg, int n_heads,
                          uint64_t seed);

// Student trunk starts as a copy of the (trained) teacher trunk; heads are
// freshly initialized.
EncoderModel student_from_teacher(const EncoderModel& teacher, int n_sp,
                                  uint64_t seed);

// Attention-weighted mean and standard deviation over frames (T x C):
// w = softmax_t(v . tanh(W h_t + b)); returns concat(mu, sigma) of size 2C.
// sigma is floored at sqrt(1e-9) per channel. T == 0 raises ShapeError.
Tensor asp_pool(const Tensor& frames, const Tensor& att_w, const Tensor& att_b,
                const Tensor& att_v);

Tensor trunk_forward(const EncoderModel& model, const Tensor& feats);

Tensor features_tensor(const FeatureSequence& f);

// Single unit-norm embedding; the model must have exactly one head.
Tensor teacher_forward(const EncoderModel& model, const FeatureSequence& f);

// One unit-norm embedding per head; the model must have >= 2 heads. The
// output order carries no identity meaning.
std::vector<Tensor> student_forward(const EncoderModel& model,
                                    const FeatureSequence& f);

// Withholds the lowest k trunk layers from gradient updates.
void set_freeze_depth(EncoderModel& model, int k);

// Toggles gradient recording for every parameter (load-for-eval support).
void set_requires_grad(EncoderModel& model, bool requires_grad);

std::vector<std::pair<std::string, Tensor>> named_params(EncoderModel& model);

// named_params minus the frozen trunk layers.
std::vector<std::pair<std::string, Tensor>> trainable_params(
    EncoderModel& model);

}  // namespace mixemb

#endif  // MIXEMB_MODEL_H_
