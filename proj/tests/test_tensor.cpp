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

#include <doctest.h>

#include <numbers>

#include "entsum/gradcheck.hpp"
#include "entsum/tensor.hpp"
#include "gradient_suite.hpp"
#include "oracles.hpp"

using namespace entsum;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (auto r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Tensor param(Eigen::Index r, Eigen::Index c, Rng& rng) {
  return Tensor::parameter(oracle::random_matrix(r, c, rng));
}

}  // namespace

TEST_CASE("matmul examples") {
  const Matrix a = mat({{1, 2}, {3, 4}});
  CHECK(matmul(Tensor::constant(Matrix::Identity(2, 2)), Tensor::constant(a)).value() == a);
  CHECK(matmul(Tensor::constant(Matrix::Zero(2, 2)), Tensor::constant(a)).value() ==
        Matrix::Zero(2, 2));
  CHECK(matmul(Tensor::constant(a), Tensor::constant(mat({{5, 6}, {7, 8}}))).value() ==
        mat({{19, 22}, {43, 50}}));
}

TEST_CASE("matmul matches the triple-loop oracle bit for bit") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = 1 + static_cast<Eigen::Index>(rng.uniform_int(7));
    const auto k = 1 + static_cast<Eigen::Index>(rng.uniform_int(7));
    const auto n = 1 + static_cast<Eigen::Index>(rng.uniform_int(7));
    const Matrix a = oracle::random_matrix(m, k, rng), b = oracle::random_matrix(k, n, rng);
    CHECK(matmul(Tensor::constant(a), Tensor::constant(b)).value() == oracle::matmul(a, b));
  }
}

TEST_CASE("matmul shape error names both shapes") {
  try {
    matmul(Tensor::constant(Matrix::Zero(2, 3)), Tensor::constant(Matrix::Zero(2, 3)));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("softmax_rows examples") {
  const Matrix u = softmax_rows(Tensor::constant(Matrix::Constant(1, 4, 2.5))).value();
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(u(0, j) == doctest::Approx(0.25).epsilon(1e-15));

  const Matrix s = softmax_rows(Tensor::constant(mat({{0, std::log(2.0)}}))).value();
  CHECK(std::abs(s(0, 0) - 1.0 / 3) < 1e-15);
  CHECK(std::abs(s(0, 1) - 2.0 / 3) < 1e-15);

  Mask vis(1, 3);
  vis << true, false, true;
  const Matrix masked = softmax_rows(Tensor::constant(mat({{5, 1, 3}})), vis).value();
  const auto sub = oracle::softmax({5, 3});
  CHECK(masked(0, 1) == 0.0);
  CHECK(std::abs(masked(0, 0) - sub[0]) < 1e-15);
  CHECK(std::abs(masked(0, 2) - sub[1]) < 1e-15);
}

TEST_CASE("softmax_rows sums to one and is shift invariant") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = oracle::random_matrix(3, 6, rng, 10.0);
    const Matrix p = softmax_rows(Tensor::constant(x)).value();
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
    x.row(1).array() += rng.uniform(-50, 50);
    const Matrix q = softmax_rows(Tensor::constant(x)).value();
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax_rows rejects a fully masked row") {
  Mask vis = Mask::Constant(2, 2, true);
  vis(1, 0) = vis(1, 1) = false;
  CHECK_THROWS_AS(softmax_rows(Tensor::constant(Matrix::Zero(2, 2)), vis), EmptyContextError);
}

TEST_CASE("layer_norm examples") {
  const Tensor one = Tensor::constant(Matrix::Ones(1, 3));
  const Tensor zero = Tensor::constant(Matrix::Zero(1, 3));
  CHECK(layer_norm(Tensor::constant(Matrix::Constant(1, 3, 7.0)), one, zero, 1e-6)
            .value()
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const Matrix pm = layer_norm(Tensor::constant(mat({{-1, 1}})),
                               Tensor::constant(Matrix::Ones(1, 2)),
                               Tensor::constant(Matrix::Zero(1, 2)), 0.0)
                        .value();
  CHECK(pm(0, 0) == -1.0);
  CHECK(pm(0, 1) == 1.0);

  const Matrix x = layer_norm(Tensor::constant(mat({{1, 2, 3}})), one, zero, 0.0).value();
  CHECK(std::abs(x(0, 0) + std::sqrt(1.5)) < 1e-15);
  CHECK(x(0, 1) == 0.0);
  CHECK(std::abs(x(0, 2) - std::sqrt(1.5)) < 1e-15);
}

TEST_CASE("layer_norm matches the scalar oracle") {
  Rng rng(5);
  const Matrix x = oracle::random_matrix(4, 5, rng, 3.0);
  const Matrix g = oracle::random_matrix(1, 5, rng), b = oracle::random_matrix(1, 5, rng);
  const Matrix y = layer_norm(Tensor::constant(x), Tensor::constant(g), Tensor::constant(b), 1e-6)
                       .value();
  for (Eigen::Index i = 0; i < 4; ++i) {
    const auto ref = oracle::layer_norm(oracle::row(x, i), oracle::row(g, 0), oracle::row(b, 0), 1e-6);
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(y(i, j) - ref[static_cast<std::size_t>(j)]) < 1e-12);
  }
}

TEST_CASE("backward examples") {
  Tensor w = Tensor::parameter(mat({{0.5, -1, 2}}));
  backward(sum(w));
  CHECK(w.grad() == Matrix::Ones(1, 3));

  Tensor v = Tensor::parameter(mat({{2, -3}}));
  backward(sum(mul(v, v)));
  CHECK(v.grad() == mat({{4, -6}}));
}

TEST_CASE("backward accumulates over repeated uses and across calls") {
  Tensor w = Tensor::parameter(mat({{1, 2}}));
  backward(sum(add(w, w)));
  CHECK(w.grad() == Matrix::Constant(1, 2, 2.0));
  backward(sum(w));
  CHECK(w.grad() == Matrix::Constant(1, 2, 3.0));
  w.zero_grad();
  CHECK(w.grad() == Matrix::Zero(1, 2));
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tensor w = Tensor::parameter(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(backward(w), ShapeError);
}

TEST_CASE("every reachable parameter gets a gradient") {
  Rng rng(2);
  Tensor a = param(3, 4, rng), b = param(4, 2, rng), unused = param(2, 2, rng);
  backward(sum(relu(matmul(a, b))));
  CHECK(a.has_grad());
  CHECK(b.has_grad());
  CHECK_FALSE(unused.has_grad());
  CHECK(a.grad().rows() == 3);
  CHECK(a.grad().cols() == 4);
}

TEST_CASE("NoGradGuard stops recording") {
  Tensor w = Tensor::parameter(Matrix::Ones(1, 2));
  Tensor out;
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    out = sum(w);
  }
  CHECK(grad_enabled());
  CHECK_FALSE(out.requires_grad());
}

TEST_CASE("finite_diff_check examples") {
  Rng rng(9);
  Tensor w = param(2, 3, rng);
  CHECK(finite_diff_check([&] { return sum(mul(w, w)); }, {w}) < 1e-7);

  Tensor logits = param(1, 3, rng);
  const int target[1] = {2};
  CHECK(finite_diff_check([&] { return cross_entropy(logits, target); }, {logits}) < 1e-6);
}

TEST_CASE("cross_entropy matches the log-softmax definition") {
  const Matrix l = mat({{1, 2, 3}, {0, 0, 0}});
  const int targets[2] = {2, 1};
  const double expected =
      0.5 * (-std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0))) + std::log(3.0));
  CHECK(std::abs(cross_entropy(Tensor::constant(l), targets).item() - expected) < 1e-14);
}

TEST_CASE("gather, concat and slice move the right rows") {
  const Matrix t = mat({{1, 2}, {3, 4}, {5, 6}});
  const int rows[3] = {2, 0, 2};
  CHECK(gather_rows(Tensor::constant(t), rows).value() == mat({{5, 6}, {1, 2}, {5, 6}}));
  IndexMatrix idx(2, 2);
  idx << 1, 0, 0, 0;
  CHECK(gather_cols(Tensor::constant(mat({{1, 2}, {3, 4}})), idx).value() == mat({{2, 1}, {3, 3}}));
  std::vector<Tensor> parts{Tensor::constant(mat({{1}})), Tensor::constant(mat({{2}, {3}}))};
  CHECK(concat_rows(parts).value() == mat({{1}, {2}, {3}}));
  std::vector<Tensor> cols{Tensor::constant(mat({{1}, {2}})), Tensor::constant(mat({{3}, {4}}))};
  CHECK(concat_cols(cols).value() == mat({{1, 3}, {2, 4}}));
  CHECK(slice_rows(Tensor::constant(t), 1, 2).value() == mat({{3, 4}, {5, 6}}));
  CHECK(slice_cols(Tensor::constant(t), 1, 1).value() == mat({{2}, {4}, {6}}));
  const int bad[1] = {3};
  CHECK_THROWS_AS(gather_rows(Tensor::constant(t), bad), ShapeError);
  CHECK_THROWS_AS(slice_rows(Tensor::constant(t), 2, 2), ShapeError);
}

TEST_CASE("add broadcasts a single row") {
  const Matrix r = add(Tensor::constant(mat({{1, 2}, {3, 4}})), Tensor::constant(mat({{10, 20}})))
                       .value();
  CHECK(r == mat({{11, 22}, {13, 24}}));
  CHECK_THROWS_AS(add(Tensor::constant(Matrix::Zero(2, 2)), Tensor::constant(Matrix::Zero(2, 3))),
                  ShapeError);
}

TEST_CASE("detach blocks gradient") {
  Tensor w = Tensor::parameter(mat({{1, 2}}));
  backward(sum(add(mul(detach(w), w), Tensor::constant(Matrix::Zero(1, 2)))));
  CHECK(w.grad() == mat({{1, 2}}));
}

TEST_CASE("dropout keeps the expectation and is seeded") {
  Tensor x = Tensor::constant(Matrix::Ones(200, 50));
  Rng a(4), b(4);
  const Matrix da = dropout(x, 0.3, a).value(), db = dropout(x, 0.3, b).value();
  CHECK(da == db);
  CHECK(std::abs(da.mean() - 1.0) < 0.03);
  for (Eigen::Index i = 0; i < da.size(); ++i) {
    const double v = da.data()[i];
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-15));
  }
  Rng c(1);
  CHECK(dropout(x, 0.0, c).value() == x.value());
}

TEST_CASE("randomized constructors are bit-deterministic") {
  Rng a(77), b(77);
  CHECK(oracle::random_matrix(5, 5, a) == oracle::random_matrix(5, 5, b));
  Rng c(77), d(77);
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("gradients of every op match finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u})
    for (const auto& [op, err] : oracle::op_gradient_errors(seed)) {
      CAPTURE(seed);
      CAPTURE(op);
      CHECK(err < 1e-4);
    }
}
