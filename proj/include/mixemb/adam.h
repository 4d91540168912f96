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

#ifndef MIXEMB_ADAM_H_
#define MIXEMB_ADAM_H_

#include <string>
#include <vector>

#include "mixemb/tensor.h"

namespace mixemb {

struct AdamState {
  int64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const std::vector<Tensor>& params, double lr,
                          double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8);

// Standard bias-corrected Adam update, applied in place to params.
// A non-finite gradient entry raises ValueError naming the parameter
// index (or name, when provided).
void adam_step(std::vector<Tensor>& params,
               const std::vector<std::vector<double>>& grads, AdamState& state,
               const std::vector<std::string>* names = nullptr);

// Convenience wrapper that owns state and harvests gradients from the
// parameter tensors themselves: step() updates, then zeroes grads.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params, double lr);

  void step();
  int64_t step_count() const { return state_.step_count; }
  AdamState& state() { return state_; }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  AdamState state_;
};

}  // namespace mixemb

#endif  // MIXEMB_ADAM_H_
