// Copyright 2026 The entsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Rank-2 tensors with tape-style reverse-mode differentiation.
//
// A Tensor is a shared handle to a node holding a row-major double matrix.
// Vectors are 1 x d, scalars 1 x 1. Every op records its inputs and a
// backward closure when gradient recording is on and some input requires a
// gradient; otherwise the result is a plain constant.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "entsum/errors.hpp"
#include "entsum/kernels.hpp"
#include "entsum/rng.hpp"

namespace entsum {

using IndexMatrix = RowMatrix<int>;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& delta);
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  // A value that never receives gradient.
  static Tensor constant(Matrix value);
  // A trainable leaf.
  static Tensor parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  // Direct write access; meant for leaves (optimizers, gradient checks).
  Matrix& mutable_value() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  // Gradient of the last backward pass. Zeros when nothing reached it.
  Matrix grad() const;
  void zero_grad();

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  std::array<Eigen::Index, 2> shape() const { return {rows(), cols()}; }
  double item() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Matrix value, std::initializer_list<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);
  friend Tensor make_result(Matrix value, std::span<const Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

  std::shared_ptr<detail::Node> node_;
};

// Builds an op result. The backward closure runs only when the result
// ended up requiring gradient.
Tensor make_result(Matrix value, std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);
Tensor make_result(Matrix value, std::span<const Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

// Gradient recording switch, per thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

std::string shape_string(const Tensor& t);
std::string shape_string(Eigen::Index rows, Eigen::Index cols);

// ---- operation vocabulary ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// b may be a single row, in which case it is added to every row of a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
// Empty mask means every entry is visible.
Tensor softmax_rows(const Tensor& x, const Mask& visible = Mask());
// Row-wise; gain and bias are 1 x d.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);
Tensor gather_rows(const Tensor& table, std::span<const int> rows);
// out(i, j) = x(i, index(i, j))
Tensor gather_cols(const Tensor& x, const IndexMatrix& index);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, Eigen::Index begin, Eigen::Index count);
Tensor slice_cols(const Tensor& x, Eigen::Index begin, Eigen::Index count);
// Mean over rows of -log softmax(logits)[target].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);
Tensor sum(const Tensor& x);
Tensor detach(const Tensor& x);
// Inverted dropout: keeps each entry with probability 1 - p and divides
// the survivors by 1 - p. Identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

// Populates grad on every gradient-requiring tensor reachable from loss.
// Leaf gradients accumulate across calls until zero_grad.
void backward(const Tensor& loss);

}  // namespace entsum
