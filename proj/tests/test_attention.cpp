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

#include "entsum/attention.hpp"
#include "entsum/gradcheck.hpp"
#include "gradient_suite.hpp"
#include "model_oracle.hpp"

using namespace entsum;

namespace {

using oracle::random_vanilla_head;
using oracle::random_xl_head;

double max_abs(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("absolute encoding rows are the standard sinusoid") {
  AbsolutePositionalEncoding pe(10, 6);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const auto s = oracle::sinusoid(static_cast<double>(i), 6);
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(std::abs(pe.table()(i, j) - s[static_cast<std::size_t>(j)]) < 1e-15);
  }
  CHECK(pe.block(3, 2) == pe.table().middleRows(3, 2));
  CHECK_THROWS_AS(pe.block(8, 3), CapacityError);
}

TEST_CASE("relative encoding is indexed by signed offset") {
  RelativePositionalEncoding rel(5, 4);
  CHECK(rel.table().rows() == 9);
  for (int off = -4; off <= 4; ++off) {
    const auto s = oracle::sinusoid(off, 4);
    const auto r = rel.storage_row(off);
    CHECK(r == off + 4);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(rel.table()(r, j) - s[static_cast<std::size_t>(j)]) < 1e-15);
  }
  CHECK_THROWS_AS(rel.storage_row(5), CapacityError);
  CHECK_THROWS_AS(rel.storage_row(-5), CapacityError);
}

TEST_CASE("vanilla_scores equals its four terms") {
  Rng rng(21);
  AbsolutePositionalEncoding pe(8, 2);
  for (Eigen::Index n : {2, 5}) {
    const auto head = random_vanilla_head(2, 2, rng);
    const Matrix e = oracle::random_matrix(n, 2, rng);
    const Matrix got = vanilla_scores(Tensor::constant(e), pe, head).value();
    CHECK(max_abs(got, oracle::vanilla_scores(e, pe.block(0, n), head)) < 1e-12);
  }
}

TEST_CASE("vanilla_scores examples") {
  Rng rng(22);
  const auto head = random_vanilla_head(3, 2, rng);
  const Matrix e = oracle::random_matrix(3, 3, rng);
  // U == 0 leaves the content term only.
  const Matrix content = vanilla_scores(Tensor::constant(e), Tensor::constant(e), head).value();
  Matrix expect(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      expect(i, j) = oracle::dot(oracle::project(e, i, head.w_q.value()),
                                 oracle::project(e, j, head.w_k.value()));
  CHECK(max_abs(content, expect) < 1e-12);
  const Matrix zero = Matrix::Zero(3, 3);
  CHECK(vanilla_scores(Tensor::constant(zero), Tensor::constant(zero), head).value() == zero);
  AbsolutePositionalEncoding pe(2, 3);
  CHECK_THROWS_AS(vanilla_scores(Tensor::constant(e), pe, head), CapacityError);
}

TEST_CASE("xl_scores equals its four terms") {
  RelativePositionalEncoding rel(8, 2);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto head = random_xl_head(2, 2, rng);
    const Matrix h_kv = oracle::random_matrix(3, 2, rng);  // m = 1, n = 2
    const Matrix h_q = h_kv.bottomRows(2);
    const Matrix got =
        xl_scores(Tensor::constant(h_q), Tensor::constant(h_kv), rel, head).value();
    CHECK(max_abs(got, oracle::xl_scores(h_q, h_kv, {1, 2}, {0, 1, 2}, rel, head)) < 1e-12);
  }
}

TEST_CASE("xl_scores examples") {
  Rng rng(31);
  RelativePositionalEncoding rel(6, 4);
  auto head = random_xl_head(4, 2, rng);
  const Matrix h = oracle::random_matrix(3, 4, rng);

  auto content_only = head;
  content_only.u = Tensor::constant(Matrix::Zero(1, 2));
  content_only.v = Tensor::constant(Matrix::Zero(1, 2));
  content_only.w_kr = Tensor::constant(Matrix::Zero(4, 2));
  const Matrix a = xl_scores(Tensor::constant(h), Tensor::constant(h), rel, content_only).value();
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(std::abs(a(i, j) - oracle::dot(oracle::project(h, i, head.w_q.value()),
                                           oracle::project(h, j, head.w_ke.value()))) < 1e-12);

  auto no_v = head;
  no_v.v = Tensor::constant(Matrix::Zero(1, 2));
  const Matrix b = xl_scores(Tensor::constant(Matrix::Zero(3, 4)), Tensor::constant(h), rel, no_v)
                       .value();
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double expect = oracle::dot(oracle::row(head.u.value(), 0),
                                      oracle::project(h, j, head.w_ke.value()));
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(b(i, j) - expect) < 1e-12);
  }
}

TEST_CASE("xl_scores rejects offsets outside R") {
  Rng rng(1);
  RelativePositionalEncoding rel(3, 2);
  const auto head = random_xl_head(2, 2, rng);
  const Matrix h = oracle::random_matrix(4, 2, rng);
  CHECK_THROWS_AS(xl_scores(Tensor::constant(h), Tensor::constant(h), rel, head), CapacityError);
}

TEST_CASE("xl_scores are invariant to a common position shift") {
  Rng rng(8);
  RelativePositionalEncoding rel(40, 4);
  const auto head = random_xl_head(4, 2, rng);
  const Tensor q = Tensor::constant(oracle::random_matrix(3, 4, rng));
  const Tensor kv = Tensor::constant(oracle::random_matrix(5, 4, rng));
  const Matrix base = xl_scores(q, kv, Positions::ranges(2, 3, 0, 5), rel, head).value();
  const Matrix shifted = xl_scores(q, kv, Positions::ranges(19, 3, 17, 5), rel, head).value();
  CHECK(base == shifted);
}

TEST_CASE("xl reduces to vanilla without positional terms") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const Eigen::Index d = 4, dh = 2, n = 1 + static_cast<Eigen::Index>(rng.uniform_int(6));
    RelativePositionalEncoding rel(8, d);
    const auto v = random_vanilla_head(d, dh, rng);
    AttentionHeadParams x{v.w_q, Tensor::constant(v.w_k.value()),
                          Tensor::constant(Matrix::Zero(d, dh)), v.w_v,
                          Tensor::constant(Matrix::Zero(1, dh)),
                          Tensor::constant(Matrix::Zero(1, dh))};
    const Tensor h = Tensor::constant(oracle::random_matrix(n, d, rng));
    CHECK(max_abs(xl_scores(h, h, rel, x).value(), vanilla_scores(h, h, v).value()) < 1e-12);
  }
}

TEST_CASE("score gradients match finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u})
    for (const auto& [fn, err] : oracle::score_gradient_errors(seed)) {
      CAPTURE(seed);
      CAPTURE(fn);
      CHECK(err < 1e-4);
    }
}

TEST_CASE("multi_head_attention with one visible key returns its value") {
  Rng rng(4);
  MultiHeadAttention attn = make_attention(Backbone::kXl, 1, 3, rng);
  attn.xl_heads[0].w_v = Tensor::parameter(Matrix::Identity(3, 3));
  attn.w_o = Tensor::parameter(Matrix::Identity(3, 3));
  RelativePositionalEncoding rel(8, 3);
  const Matrix kv = oracle::random_matrix(4, 3, rng);
  Mask vis = Mask::Constant(2, 4, false);
  vis(0, 2) = vis(1, 0) = true;
  const Positions pos = Positions::ranges(4, 2, 0, 4);
  const Matrix out = multi_head_attention(Tensor::constant(oracle::random_matrix(2, 3, rng)),
                                          Tensor::constant(kv), attn, vis, &pos, &rel)
                         .value();
  CHECK(max_abs(out.row(0), kv.row(2)) < 1e-15);
  CHECK(max_abs(out.row(1), kv.row(0)) < 1e-15);

  for (auto& h : attn.xl_heads) h.w_v = Tensor::constant(Matrix::Zero(3, 3));
  const Positions self = Positions::with_memory(4, 0);
  CHECK(multi_head_attention(Tensor::constant(kv), Tensor::constant(kv), attn, Mask(), &self, &rel)
            .value()
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("multi_head_attention matches the scalar oracle") {
  for (Backbone b : {Backbone::kXl, Backbone::kVanilla}) {
    Rng rng(12);
    const MultiHeadAttention attn = make_attention(b, 2, 4, rng);
    RelativePositionalEncoding rel(8, 4);
    const Matrix q = oracle::random_matrix(2, 4, rng), kv = oracle::random_matrix(2, 4, rng);
    Mask vis = Mask::Constant(2, 2, true);
    vis(0, 1) = false;
    const Positions pos = Positions::with_memory(2, 0);
    const Matrix got = multi_head_attention(Tensor::constant(q), Tensor::constant(kv), attn, vis,
                                            &pos, &rel)
                           .value();
    CHECK(max_abs(got, oracle::multi_head(q, kv, attn, vis, pos.query, pos.key, rel)) < 1e-12);
  }
}

TEST_CASE("masked keys never influence the output") {
  Rng rng(13);
  const MultiHeadAttention attn = make_attention(Backbone::kXl, 2, 4, rng);
  RelativePositionalEncoding rel(8, 4);
  const Matrix q = oracle::random_matrix(3, 4, rng);
  Matrix kv = oracle::random_matrix(4, 4, rng);
  Mask vis = Mask::Constant(3, 4, true);
  for (Eigen::Index i = 0; i < 3; ++i) vis(i, 3) = false;
  const Positions pos = Positions::ranges(1, 3, 0, 4);
  const Matrix before = multi_head_attention(Tensor::constant(q), Tensor::constant(kv), attn, vis,
                                             &pos, &rel)
                            .value();
  kv.row(3) = oracle::random_matrix(1, 4, rng) * 100.0;
  const Matrix after = multi_head_attention(Tensor::constant(q), Tensor::constant(kv), attn, vis,
                                            &pos, &rel)
                           .value();
  CHECK(before == after);
}

TEST_CASE("make_attention requires n_heads to divide d_model") {
  Rng rng(1);
  CHECK_THROWS_AS(make_attention(Backbone::kXl, 3, 8, rng), ConfigError);
}

TEST_CASE("concat_memory examples") {
  Rng rng(6);
  Tensor cur = Tensor::parameter(oracle::random_matrix(3, 2, rng));
  const Matrix none(0, 2);
  CHECK(concat_memory(none, cur).value() == cur.value());

  const Matrix mem = oracle::random_matrix(2, 2, rng);
  const Tensor out = concat_memory(mem, cur);
  CHECK(out.rows() == 5);
  CHECK(out.value().topRows(2) == mem);
  CHECK(out.value().bottomRows(3) == cur.value());
  CHECK_THROWS_AS(concat_memory(Matrix::Zero(1, 3), cur), ShapeError);
}

TEST_CASE("memory rows receive no gradient") {
  Rng rng(7);
  Tensor prev = Tensor::parameter(oracle::random_matrix(2, 2, rng));
  Tensor cur = Tensor::parameter(oracle::random_matrix(3, 2, rng));
  // The memory is built from prev but enters as a cached value.
  const Matrix mem = update_memory(Matrix(0, 2), prev.value(), 2);
  backward(sum(mul(concat_memory(mem, cur), concat_memory(mem, cur))));
  CHECK_FALSE(prev.has_grad());
  CHECK(prev.grad() == Matrix::Zero(2, 2));
  CHECK(cur.grad() == 2.0 * cur.value());
}

TEST_CASE("update_memory examples") {
  Rng rng(8);
  const Matrix fresh = oracle::random_matrix(4, 2, rng);
  CHECK(update_memory(Matrix(0, 2), fresh, 0).rows() == 0);
  CHECK(update_memory(Matrix(0, 2), fresh, 2) == fresh.bottomRows(2));
  const Matrix old = oracle::random_matrix(3, 2, rng), add2 = oracle::random_matrix(2, 2, rng);
  const Matrix m = update_memory(old, add2, 4);
  REQUIRE(m.rows() == 4);
  CHECK(m.row(0) == old.row(1));
  CHECK(m.row(1) == old.row(2));
  CHECK(m.row(2) == add2.row(0));
  CHECK(m.row(3) == add2.row(1));

  SegmentMemory seg;
  seg.capacity = 2;
  const SegmentMemory next = update_memory(seg, {fresh, fresh}, 2);
  CHECK(next.length() == 2);
  CHECK(next.layers.size() == 2);
}
