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

#ifndef MIXEMB_TENSOR_H_
#define MIXEMB_TENSOR_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mixemb/common.h"

namespace mixemb {

// One node of the dynamically recorded computation graph. Values are
// double precision, row-major. The graph lives only as long as Tensor
// handles reference it; nothing is persisted between forward passes.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same size as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Accumulates this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(value.size()); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int> shape, std::vector<double> data,
         bool requires_grad = false);

  static Tensor zeros(const std::vector<int>& shape,
                      bool requires_grad = false);
  static Tensor full(const std::vector<int>& shape, double v,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int64_t numel() const { return node_->numel(); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  double operator[](int64_t i) const {
    return node_->value[static_cast<size_t>(i)];
  }

  // Scalar extraction; the tensor must hold exactly one element.
  double item() const;

  const std::vector<double>& grad() const;
  void zero_grad();

  // Reverse pass from a scalar tensor. Seeds d(self)/d(self)=1 and runs
  // every recorded backward function in reverse topological order.
  void backward();

  // Detached copy of the current values (no graph history).
  Tensor detach() const;

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  friend Tensor make_op_result(std::vector<int> shape,
                               std::vector<double> value,
                               std::vector<std::shared_ptr<TensorNode>> parents,
                               std::function<void(TensorNode&)> backward_fn);

  std::shared_ptr<TensorNode> node_;
};

// Constructs an op output node; requires_grad is inherited from parents.
Tensor make_op_result(std::vector<int> shape, std::vector<double> value,
                      std::vector<std::shared_ptr<TensorNode>> parents,
                      std::function<void(TensorNode&)> backward_fn);

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace mixemb

#endif  // MIXEMB_TENSOR_H_
