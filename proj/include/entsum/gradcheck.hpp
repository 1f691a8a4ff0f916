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

#include <functional>
#include <vector>

#include "entsum/tensor.hpp"

namespace entsum {

// Compares backward() against central differences of f, perturbing every
// entry of every parameter by +-step. Entries where the two disagree by more
// than 1e-6 are re-estimated with Ridders' extrapolation before scoring, so
// near-zero gradients are not judged against cancellation noise. Returns
//   max_i |analytic_i - numeric_i| / max(1e-8, |analytic_i| + |numeric_i|).
// f must be deterministic for fixed parameter values.
double finite_diff_check(const std::function<Tensor()>& f,
                         std::vector<Tensor> params, double step = 1e-5);

}  // namespace entsum
