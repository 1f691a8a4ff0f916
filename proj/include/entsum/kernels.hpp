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

// Dense numeric kernels shared by the autodiff ops and by test oracles.
// Everything here is a free function over Eigen expressions, templated on
// the scalar type of its arguments.

#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace entsum {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;
using Vector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Visibility mask for attention: true means the key may be attended to.
using Mask = RowMatrix<bool>;

namespace kernels {

// Matrix product with a pinned summation order: every output entry is
// accumulated over the inner index in ascending order, starting from zero.
// The i-k-j loop keeps that order per entry while streaming rows of b.
template <typename DerivedA, typename DerivedB>
RowMatrix<typename DerivedA::Scalar> ordered_matmul(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index m = a.rows(), k = a.cols(), n = b.cols();
  RowMatrix<Scalar> out = RowMatrix<Scalar>::Zero(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar* out_row = out.data() + i * n;
    for (Eigen::Index p = 0; p < k; ++p) {
      const Scalar a_ip = a(i, p);
      for (Eigen::Index j = 0; j < n; ++j) out_row[j] += a_ip * b(p, j);
    }
  }
  return out;
}

// Row-wise softmax restricted to the visible entries of each row. Hidden
// entries come out as exactly zero. The caller guarantees every row has a
// visible entry. Pass an empty mask for "all visible".
template <typename Derived>
RowMatrix<typename Derived::Scalar> masked_softmax_rows(
    const Eigen::MatrixBase<Derived>& x, const Mask& visible) {
  using Scalar = typename Derived::Scalar;
  const bool masked = visible.size() != 0;
  RowMatrix<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Scalar row_max = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (!masked || visible(i, j)) row_max = std::max(row_max, x(i, j));
    Scalar total = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const Scalar e =
          (!masked || visible(i, j)) ? std::exp(x(i, j) - row_max) : Scalar(0);
      out(i, j) = e;
      total += e;
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

// Per-row standardization (x - mean) / sqrt(var + eps) with the population
// variance. Also returns the per-row inverse standard deviation, which the
// backward pass needs.
template <typename Derived>
RowMatrix<typename Derived::Scalar> standardize_rows(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar eps,
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>* inv_std) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d = x.cols();
  RowMatrix<Scalar> out(x.rows(), d);
  if (inv_std) inv_std->resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Scalar mean = 0;
    for (Eigen::Index j = 0; j < d; ++j) mean += x(i, j);
    mean /= Scalar(d);
    Scalar var = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const Scalar c = x(i, j) - mean;
      var += c * c;
    }
    var /= Scalar(d);
    const Scalar r = Scalar(1) / std::sqrt(var + eps);
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = (x(i, j) - mean) * r;
    if (inv_std) (*inv_std)(i) = r;
  }
  return out;
}

// Sinusoid table: row p holds sin(pos / 10000^(2k/d)) in column 2k and the
// matching cos in column 2k+1, with pos = first_position + p.
template <typename Scalar = double>
RowMatrix<Scalar> sinusoid_table(Eigen::Index rows, Eigen::Index d,
                                 Eigen::Index first_position = 0) {
  RowMatrix<Scalar> table(rows, d);
  for (Eigen::Index p = 0; p < rows; ++p) {
    const Scalar pos = Scalar(first_position + p);
    for (Eigen::Index c = 0; c < d; ++c) {
      const Eigen::Index k2 = c - (c % 2);
      const Scalar freq = std::pow(Scalar(10000), -Scalar(k2) / Scalar(d));
      table(p, c) = (c % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return table;
}

}  // namespace kernels
}  // namespace entsum
