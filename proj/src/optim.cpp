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

#include "entsum/optim.hpp"

#include <string>

namespace entsum {

void bert_adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr,
                    double beta1, double beta2, double eps, double weight_decay) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw ShapeError("bert_adam_step: gradient " + shape_string(grad.rows(), grad.cols()) +
                     " for parameter " + shape_string(param.rows(), param.cols()));
  if (state.m.size() == 0 && param.size() != 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  }
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols() ||
      state.v.rows() != param.rows() || state.v.cols() != param.cols())
    throw ShapeError("bert_adam_step: optimizer state does not match parameter " +
                     shape_string(param.rows(), param.cols()));
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  Matrix update = state.m.array() / (state.v.array().sqrt() + eps);
  if (weight_decay != 0.0) update += weight_decay * param;
  param -= lr * update;
}

BertAdam::BertAdam(std::vector<NamedParameter> params, const TrainConfig& config)
    : params_(std::move(params)), state_(params_.size()), config_(config) {
  // Biases, normalisation gains and the u/v position biases are exempt from
  // weight decay, matching the usual BERT setup.
  for (const auto& p : params_) decay_.push_back(p.tensor.rows() > 1);
}

void BertAdam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    bert_adam_step(t.mutable_value(), t.grad(), state_[i], config_.lr, config_.beta1,
                   config_.beta2, config_.eps, decay_[i] ? config_.weight_decay : 0.0);
  }
  zero_grad();
}

void BertAdam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace entsum
