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

#include "mixemb/model.h"

#include <cmath>

namespace mixemb {

namespace {

Tensor xavier(Rng& rng, const std::vector<int>& shape, double fan_in,
              double fan_out) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return Tensor(shape, v, /*requires_grad=*/true);
}

AspHead make_head(const EncoderConfig& cfg, Rng& rng) {
  AspHead h;
  int C = cfg.channels, A = cfg.attn_dim, D = cfg.embed_dim;
  h.att_w = xavier(rng, {C, A}, C, A);
  h.att_b = Tensor::zeros({A}, true);
  h.att_v = xavier(rng, {A}, A, 1);
  h.proj_w = xavier(rng, {2 * C, D}, 2 * C, D);
  h.proj_b = Tensor::zeros({D}, true);
  return h;
}

Tensor copy_param(const Tensor& t) {
  return Tensor(t.shape(), t.data(), /*requires_grad=*/true);
}

}  // namespace

EncoderModel make_encoder(const EncoderConfig& cfg, int n_heads,
                          uint64_t seed) {
  if (n_heads < 1) throw ValueError("make_encoder: need at least one head");
  if (cfg.kernel % 2 == 0)
    throw ValueError("make_encoder: kernel must be odd for same-size output");
  Rng rng(seed_combine(seed, 0xe4c0deu));
  EncoderModel m;
  m.cfg = cfg;
  for (int layer = 0; layer < cfg.depth; ++layer) {
    int cin = layer == 0 ? cfg.n_mels : cfg.channels;
    ConvBlock b;
    b.weight = xavier(rng, {cfg.kernel, cin, cfg.channels},
                      static_cast<double>(cfg.kernel) * cin,
                      static_cast<double>(cfg.kernel) * cfg.channels);
    b.bias = Tensor::zeros({cfg.channels}, true);
    m.trunk.push_back(std::move(b));
  }
  for (int h = 0; h < n_heads; ++h) m.heads.push_back(make_head(cfg, rng));
  return m;
}

EncoderModel student_from_teacher(const EncoderModel& teacher, int n_sp,
                                  uint64_t seed) {
  if (n_sp < 2)
    throw ValueError("student_from_teacher: n_sp must be >= 2, got " +
                     std::to_string(n_sp));
  Rng rng(seed_combine(seed, 0x57adu));
  EncoderModel m;
  m.cfg = teacher.cfg;
  for (const auto& b : teacher.trunk) {
    ConvBlock c;
    c.weight = copy_param(b.weight);
    c.bias = copy_param(b.bias);
    m.trunk.push_back(std::move(c));
  }
  for (int h = 0; h < n_sp; ++h) m.heads.push_back(make_head(m.cfg, rng));
  return m;
}

Tensor asp_pool(const Tensor& frames, const Tensor& att_w, const Tensor& att_b,
                const Tensor& att_v) {
  if (frames.ndim() != 2)
    throw ShapeError("asp_pool: frames must be 2-D (T x C), got " +
                     shape_str(frames.shape()));
  if (frames.dim(0) == 0) throw ShapeError("asp_pool: zero frames");
  Tensor scores = tanh_op(add(matmul(frames, att_w), att_b));  // T x A
  Tensor logits = matmul(scores, att_v);                       // T
  Tensor w = softmax(logits, 0);
  Tensor mu = matmul(w, frames);                    // C
  Tensor m2 = matmul(w, mul(frames, frames));       // C
  Tensor var = sub(m2, mul(mu, mu));
  Tensor sigma = sqrt_op(clamp_min(var, 1e-9));
  return concat({mu, sigma}, 0);
}

Tensor trunk_forward(const EncoderModel& model, const Tensor& feats) {
  Tensor x = feats;
  int pad = (model.cfg.kernel - 1) / 2;
  for (const auto& b : model.trunk)
    x = tanh_op(add(conv1d(x, b.weight, pad), b.bias));
  return x;
}

Tensor features_tensor(const FeatureSequence& f) {
  return Tensor({f.frames.rows, f.frames.cols}, f.frames.v);
}

namespace {

Tensor head_embed(const Tensor& trunk_out, const AspHead& head) {
  Tensor stats = asp_pool(trunk_out, head.att_w, head.att_b, head.att_v);
  Tensor raw = add(matmul(stats, head.proj_w), head.proj_b);
  return l2_normalize(raw);
}

}  // namespace

Tensor teacher_forward(const EncoderModel& model, const FeatureSequence& f) {
  if (model.heads.size() != 1)
    throw ValueError("teacher_forward: model has " +
                     std::to_string(model.heads.size()) +
                     " heads, expected exactly 1");
  Tensor x = trunk_forward(model, features_tensor(f));
  return head_embed(x, model.heads[0]);
}

std::vector<Tensor> student_forward(const EncoderModel& model,
                                    const FeatureSequence& f) {
  if (model.heads.size() < 2)
    throw ValueError("student_forward: model has " +
                     std::to_string(model.heads.size()) +
                     " heads, expected >= 2");
  Tensor x = trunk_forward(model, features_tensor(f));
  std::vector<Tensor> out;
  for (const auto& h : model.heads) out.push_back(head_embed(x, h));
  return out;
}

void set_freeze_depth(EncoderModel& model, int k) {
  if (k < 0 || k > static_cast<int>(model.trunk.size()))
    throw ValueError("set_freeze_depth: k " + std::to_string(k) +
                     " outside [0, " + std::to_string(model.trunk.size()) +
                     "]");
  model.freeze_depth = k;
  // Frozen layers sit at the bottom, so skipping their gradient recording
  // also prunes the whole backward pass below the first trainable layer.
  for (size_t i = 0; i < model.trunk.size(); ++i) {
    bool rg = static_cast<int>(i) >= k;
    model.trunk[i].weight.node()->requires_grad = rg;
    model.trunk[i].bias.node()->requires_grad = rg;
  }
}

void set_requires_grad(EncoderModel& model, bool requires_grad) {
  for (auto& [name, t] : named_params(model))
    t.node()->requires_grad = requires_grad;
  if (!requires_grad) model.freeze_depth = static_cast<int>(model.trunk.size());
}

std::vector<std::pair<std::string, Tensor>> named_params(EncoderModel& model) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (size_t i = 0; i < model.trunk.size(); ++i) {
    out.emplace_back("trunk." + std::to_string(i) + ".weight",
                     model.trunk[i].weight);
    out.emplace_back("trunk." + std::to_string(i) + ".bias",
                     model.trunk[i].bias);
  }
  for (size_t h = 0; h < model.heads.size(); ++h) {
    std::string p = "head." + std::to_string(h) + ".";
    out.emplace_back(p + "att_w", model.heads[h].att_w);
    out.emplace_back(p + "att_b", model.heads[h].att_b);
    out.emplace_back(p + "att_v", model.heads[h].att_v);
    out.emplace_back(p + "proj_w", model.heads[h].proj_w);
    out.emplace_back(p + "proj_b", model.heads[h].proj_b);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> trainable_params(
    EncoderModel& model) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (size_t i = 0; i < model.trunk.size(); ++i) {
    if (static_cast<int>(i) < model.freeze_depth) continue;
    out.emplace_back("trunk." + std::to_string(i) + ".weight",
                     model.trunk[i].weight);
    out.emplace_back("trunk." + std::to_string(i) + ".bias",
                     model.trunk[i].bias);
  }
  for (size_t h = 0; h < model.heads.size(); ++h) {
    std::string p = "head." + std::to_string(h) + ".";
    out.emplace_back(p + "att_w", model.heads[h].att_w);
    out.emplace_back(p + "att_b", model.heads[h].att_b);
    out.emplace_back(p + "att_v", model.heads[h].att_v);
    out.emplace_back(p + "proj_w", model.heads[h].proj_w);
    out.emplace_back(p + "proj_b", model.heads[h].proj_b);
  }
  return out;
}

}  // namespace mixemb
