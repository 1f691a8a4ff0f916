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

#include <span>
#include <vector>

#include "entsum/config.hpp"
#include "entsum/model.hpp"

namespace entsum {

struct AdamState {
  Matrix m;
  Matrix v;
};

// One BERTAdam update: Adam moments without bias correction, with decoupled
// weight decay folded into the step,
//   m <- b1 m + (1 - b1) g
//   v <- b2 v + (1 - b2) g^2
//   p <- p - lr (m / (sqrt(v) + eps) + wd p)
// Zero-sized state is initialised to zeros.
void bert_adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr,
                    double beta1, double beta2, double eps, double weight_decay);

class BertAdam {
 public:
  BertAdam(std::vector<NamedParameter> params, const TrainConfig& config);

  // Applies one update from the accumulated gradients, then clears them.
  void step();
  void zero_grad();
  const std::vector<AdamState>& state() const { return state_; }

 private:
  std::vector<NamedParameter> params_;
  std::vector<AdamState> state_;
  std::vector<bool> decay_;
  TrainConfig config_;
};

}  // namespace entsum
