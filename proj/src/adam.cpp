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

#include "mixemb/adam.h"

#include <cmath>

namespace mixemb {

AdamState make_adam_state(const std::vector<Tensor>& params, double lr,
                          double beta1, double beta2, double eps) {
  if (lr <= 0.0) throw ValueError("adam: lr must be positive");
  AdamState st;
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const auto& p : params) {
    st.first_moment.emplace_back(p.numel(), 0.0);
    st.second_moment.emplace_back(p.numel(), 0.0);
  }
  return st;
}

void adam_step(std::vector<Tensor>& params,
               const std::vector<std::vector<double>>& grads, AdamState& state,
               const std::vector<std::string>* names) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (static_cast<int64_t>(grads[i].size()) != params[i].numel())
      throw ShapeError("adam_step: gradient size mismatch for parameter " +
                       (names ? (*names)[i] : std::to_string(i)));
  }
  state.step_count += 1;
  double t = static_cast<double>(state.step_count);
  double bc1 = 1.0 - std::pow(state.beta1, t);
  double bc2 = 1.0 - std::pow(state.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grads[i];
    for (size_t j = 0; j < g.size(); ++j) {
      if (!std::isfinite(g[j]))
        throw ValueError("adam_step: non-finite gradient in parameter " +
                         (names ? (*names)[i] : std::to_string(i)));
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      value[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

AdamOptimizer::AdamOptimizer(
    std::vector<std::pair<std::string, Tensor>> params, double lr)
    : params_(std::move(params)) {
  std::vector<Tensor> ts;
  for (auto& [name, t] : params_) ts.push_back(t);
  state_ = make_adam_state(ts, lr);
}

void AdamOptimizer::step() {
  std::vector<Tensor> ts;
  std::vector<std::vector<double>> grads;
  std::vector<std::string> names;
  for (auto& [name, t] : params_) {
    ts.push_back(t);
    grads.push_back(t.grad());
    names.push_back(name);
  }
  adam_step(ts, grads, state_, &names);
  for (auto& [name, t] : params_) t.zero_grad();
}

}  // namespace mixemb
