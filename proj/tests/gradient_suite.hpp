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

// Finite-difference checks of every tensor op and of both attention score
// functions, shared by the unit tests and the acceptance run.

#include <string>
#include <utility>
#include <vector>

#include "entsum/attention.hpp"
#include "entsum/gradcheck.hpp"
#include "entsum/tensor.hpp"
#include "oracles.hpp"

namespace oracle {

using GradientReport = std::vector<std::pair<std::string, double>>;

inline GradientReport op_gradient_errors(std::uint64_t seed) {
  using namespace entsum;
  Rng rng(seed);
  auto param = [&](Eigen::Index r, Eigen::Index c) {
    return Tensor::parameter(random_matrix(r, c, rng));
  };
  Tensor a = param(3, 4), b = param(4, 2), c = param(3, 4);
  Tensor row = param(1, 4), g = param(1, 4), bias = param(1, 4);
  Tensor proj = param(2, 4);
  auto weighted = [seed](const Tensor& t) {
    // A fixed random weighting keeps every output entry in play.
    Rng w(seed + 100);
    return sum(mul(t, Tensor::constant(random_matrix(t.rows(), t.cols(), w))));
  };
  Mask vis = Mask::Constant(3, 4, true);
  vis(0, 1) = vis(2, 3) = false;
  const std::vector<int> rows = {2, 0, 2, 1};
  IndexMatrix idx(3, 2);
  idx << 3, 0, 1, 1, 2, 0;
  const std::vector<int> targets = {1, 3, 0};

  GradientReport r;
  auto check = [&](const std::string& name, const std::function<Tensor()>& f,
                   std::vector<Tensor> params) {
    r.emplace_back(name, finite_diff_check(f, std::move(params)));
  };
  check("matmul", [&] { return weighted(matmul(a, b)); }, {a, b});
  check("transpose", [&] { return weighted(transpose(a)); }, {a});
  check("add", [&] { return weighted(add(a, c)); }, {a, c});
  check("add_row", [&] { return weighted(add(a, row)); }, {a, row});
  check("sub", [&] { return weighted(sub(a, c)); }, {a, c});
  check("mul", [&] { return weighted(mul(a, c)); }, {a, c});
  check("scale", [&] { return weighted(scale(a, -1.7)); }, {a});
  check("relu", [&] { return weighted(relu(a)); }, {a});
  check("softmax_rows", [&] { return weighted(softmax_rows(a)); }, {a});
  check("softmax_rows_masked", [&] { return weighted(softmax_rows(a, vis)); }, {a});
  check("layer_norm", [&] { return weighted(layer_norm(a, g, bias, 1e-6)); }, {a, g, bias});
  check("gather_rows", [&] { return weighted(gather_rows(a, rows)); }, {a});
  check("gather_cols", [&] { return weighted(gather_cols(a, idx)); }, {a});
  check("concat_rows", [&] {
    std::vector<Tensor> p{a, proj};
    return weighted(concat_rows(p));
  }, {a, proj});
  check("concat_cols", [&] {
    std::vector<Tensor> p{a, c};
    return weighted(concat_cols(p));
  }, {a, c});
  check("slice_rows", [&] { return weighted(slice_rows(a, 1, 2)); }, {a});
  check("slice_cols", [&] { return weighted(slice_cols(a, 1, 2)); }, {a});
  check("cross_entropy", [&] { return cross_entropy(a, targets); }, {a});
  check("sum", [&] { return sum(a); }, {a});
  check("composition", [&] {
    return cross_entropy(matmul(relu(matmul(a, transpose(c))), a), targets);
  }, {a, c});
  return r;
}

inline entsum::AttentionHeadParams random_xl_head(Eigen::Index d, Eigen::Index dh,
                                                  entsum::Rng& rng) {
  using entsum::Tensor;
  return {Tensor::parameter(random_matrix(d, dh, rng)), Tensor::parameter(random_matrix(d, dh, rng)),
          Tensor::parameter(random_matrix(d, dh, rng)), Tensor::parameter(random_matrix(d, dh, rng)),
          Tensor::parameter(random_matrix(1, dh, rng)), Tensor::parameter(random_matrix(1, dh, rng))};
}

inline entsum::VanillaHeadParams random_vanilla_head(Eigen::Index d, Eigen::Index dh,
                                                     entsum::Rng& rng) {
  using entsum::Tensor;
  return {Tensor::parameter(random_matrix(d, dh, rng)), Tensor::parameter(random_matrix(d, dh, rng)),
          Tensor::parameter(random_matrix(d, dh, rng))};
}

inline GradientReport score_gradient_errors(std::uint64_t seed) {
  using namespace entsum;
  Rng rng(seed);
  RelativePositionalEncoding rel(8, 4);
  AbsolutePositionalEncoding pe(8, 4);
  auto xh = random_xl_head(4, 2, rng);
  auto vh = random_vanilla_head(4, 2, rng);
  Tensor h = Tensor::parameter(random_matrix(5, 4, rng));
  Tensor q = Tensor::parameter(random_matrix(3, 4, rng));
  const Tensor w = Tensor::constant(random_matrix(3, 5, rng));
  const Tensor w2 = Tensor::constant(random_matrix(5, 5, rng));
  GradientReport r;
  r.emplace_back("xl_scores",
                 finite_diff_check([&] { return sum(mul(xl_scores(q, h, rel, xh), w)); },
                                   {q, h, xh.w_q, xh.w_ke, xh.w_kr, xh.u, xh.v}));
  r.emplace_back("vanilla_scores",
                 finite_diff_check([&] { return sum(mul(vanilla_scores(h, pe, vh), w2)); },
                                   {h, vh.w_q, vh.w_k}));
  return r;
}

}  // namespace oracle
