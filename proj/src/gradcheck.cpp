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

#include "entsum/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace entsum {

namespace {

double relative_error(double exact, double numeric) {
  return std::abs(exact - numeric) / std::max(1e-8, std::abs(exact) + std::abs(numeric));
}

// Ridders' extrapolation of central differences with shrinking steps.
// Returns the tableau entry with the smallest internal error estimate,
// which keeps both truncation and cancellation error low and steps back
// from kinks that the widest steps straddle.
double ridders_derivative(const std::function<double(double)>& g, double h) {
  constexpr int kTable = 10;
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink, kSafe = 2.0;
  std::array<std::array<double, kTable>, kTable> a{};
  a[0][0] = (g(h) - g(-h)) / (2.0 * h);
  double err = std::numeric_limits<double>::max();
  double best = a[0][0];
  for (int i = 1; i < kTable; ++i) {
    h /= kShrink;
    a[0][i] = (g(h) - g(-h)) / (2.0 * h);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]),
                                std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
  }
  return best;
}

}  // namespace

double finite_diff_check(const std::function<Tensor()>& f,
                         std::vector<Tensor> params, double step) {
  for (Tensor& p : params) p.zero_grad();
  backward(f());
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());

  // A plain central difference loses to cancellation once a gradient entry
  // nears 1e-9; such entries get a second, extrapolated estimate.
  constexpr double kRefineAbove = 1e-6;
  constexpr double kRiddersStep = 1e-2;
  NoGradGuard no_grad;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& value = params[k].mutable_value();
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const double up = f().item();
      value.data()[i] = saved - step;
      const double down = f().item();
      value.data()[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[k].data()[i];
      if (relative_error(exact, numeric) > kRefineAbove) {
        numeric = ridders_derivative(
            [&](double dx) {
              value.data()[i] = saved + dx;
              const double y = f().item();
              value.data()[i] = saved;
              return y;
            },
            kRiddersStep);
      }
      worst = std::max(worst, relative_error(exact, numeric));
    }
  }
  return worst;
}

}  // namespace entsum
