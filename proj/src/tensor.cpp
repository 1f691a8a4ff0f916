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

#include "entsum/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace entsum {
namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) +
                     " vs " + shape_string(b));
}

}  // namespace

void detail::Node::accumulate(const Matrix& delta) {
  if (!requires_grad) return;
  if (!has_grad) {
    grad = delta;
    has_grad = true;
  } else {
    grad += delta;
  }
}

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Matrix Tensor::grad() const {
  if (node_->has_grad) return node_->grad;
  return Matrix::Zero(rows(), cols());
}

void Tensor::zero_grad() {
  node_->grad.resize(0, 0);
  node_->has_grad = false;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw ShapeError("item: expected 1x1, got " + shape_string(*this));
  return node_->value(0, 0);
}

Tensor make_result(Matrix value, std::span<const Tensor> inputs,
                   std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Tensor& in : inputs) {
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (const Tensor& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_result(Matrix value, std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> backward) {
  return make_result(std::move(value),
                     std::span<const Tensor>(inputs.begin(), inputs.size()),
                     std::move(backward));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

std::string shape_string(const Tensor& t) {
  return shape_string(t.rows(), t.cols());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a) +
                     " x " + shape_string(b));
  return make_result(kernels::ordered_matmul(a.value(), b.value()), {a, b},
                     [](Node& self) {
                       Node& na = *self.inputs[0];
                       Node& nb = *self.inputs[1];
                       if (na.requires_grad)
                         na.accumulate(self.grad * nb.value.transpose());
                       if (nb.requires_grad)
                         nb.accumulate(na.value.transpose() * self.grad);
                     });
}

Tensor transpose(const Tensor& a) {
  return make_result(a.value().transpose(), {a}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad.transpose());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols()) {
    Matrix out = a.value();
    out.rowwise() += b.value().row(0);
    return make_result(std::move(out), {a, b}, [](Node& self) {
      self.inputs[0]->accumulate(self.grad);
      if (self.inputs[1]->requires_grad)
        self.inputs[1]->accumulate(self.grad.colwise().sum());
    });
  }
  require_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad);
    self.inputs[1]->accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad);
    if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) na.accumulate(self.grad.cwiseProduct(nb.value));
    if (nb.requires_grad) nb.accumulate(self.grad.cwiseProduct(na.value));
  });
}

Tensor scale(const Tensor& a, double factor) {
  return make_result(a.value() * factor, {a}, [factor](Node& self) {
    self.inputs[0]->accumulate(self.grad * factor);
  });
}

Tensor relu(const Tensor& a) {
  return make_result(a.value().cwiseMax(0.0), {a}, [](Node& self) {
    const Matrix& x = self.inputs[0]->value;
    self.inputs[0]->accumulate(
        (x.array() > 0.0).select(self.grad, Matrix::Zero(x.rows(), x.cols())));
  });
}

Tensor softmax_rows(const Tensor& x, const Mask& visible) {
  if (visible.size() != 0) {
    if (visible.rows() != x.rows() || visible.cols() != x.cols())
      throw ShapeError("softmax_rows: mask " +
                       shape_string(visible.rows(), visible.cols()) +
                       " does not match " + shape_string(x));
    for (Eigen::Index i = 0; i < visible.rows(); ++i)
      if (!visible.row(i).any())
        throw EmptyContextError("softmax_rows: row " + std::to_string(i) +
                                " has no visible entry");
  } else if (x.cols() == 0 && x.rows() > 0) {
    throw EmptyContextError("softmax_rows: rows have no entries");
  }
  return make_result(kernels::masked_softmax_rows(x.value(), visible), {x},
                     [](Node& self) {
                       const Matrix& y = self.value;
                       Matrix gy = self.grad.cwiseProduct(y);
                       Eigen::VectorXd dot = gy.rowwise().sum();
                       Matrix dx = gy;
                       dx -= (y.array().colwise() * dot.array()).matrix();
                       self.inputs[0]->accumulate(dx);
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 ||
      bias.cols() != x.cols())
    throw ShapeError("layer_norm: gain " + shape_string(gain) + " / bias " +
                     shape_string(bias) + " do not fit " + shape_string(x));
  Eigen::VectorXd inv_std;
  Matrix xhat = kernels::standardize_rows(x.value(), eps, &inv_std);
  Matrix out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return make_result(
      std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& nx = *self.inputs[0];
        Node& ng = *self.inputs[1];
        Node& nb = *self.inputs[2];
        const Matrix& gy = self.grad;
        if (ng.requires_grad) ng.accumulate(gy.cwiseProduct(xhat).colwise().sum());
        if (nb.requires_grad) nb.accumulate(gy.colwise().sum());
        if (nx.requires_grad) {
          const double d = static_cast<double>(xhat.cols());
          Matrix gxhat = gy;
          gxhat.array().rowwise() *= ng.value.row(0).array();
          Eigen::VectorXd mean_g = gxhat.rowwise().sum() / d;
          Eigen::VectorXd mean_gx = gxhat.cwiseProduct(xhat).rowwise().sum() / d;
          Matrix dx = gxhat;
          dx.colwise() -= mean_g;
          dx -= (xhat.array().colwise() * mean_gx.array()).matrix();
          dx.array().colwise() *= inv_std.array();
          nx.accumulate(dx);
        }
      });
}

Tensor gather_rows(const Tensor& table, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= table.rows())
      throw ShapeError("gather_rows: index " + std::to_string(rows[i]) +
                       " outside " + shape_string(table));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(rows[i]);
  }
  std::vector<int> index(rows.begin(), rows.end());
  return make_result(std::move(out), {table},
                     [index = std::move(index)](Node& self) {
                       Node& nt = *self.inputs[0];
                       Matrix g = Matrix::Zero(nt.value.rows(), nt.value.cols());
                       for (std::size_t i = 0; i < index.size(); ++i)
                         g.row(index[i]) += self.grad.row(static_cast<Eigen::Index>(i));
                       nt.accumulate(g);
                     });
}

Tensor gather_cols(const Tensor& x, const IndexMatrix& index) {
  if (index.rows() != x.rows())
    throw ShapeError("gather_cols: index has " + std::to_string(index.rows()) +
                     " rows, input " + shape_string(x));
  Matrix out(index.rows(), index.cols());
  for (Eigen::Index i = 0; i < index.rows(); ++i)
    for (Eigen::Index j = 0; j < index.cols(); ++j) {
      const int c = index(i, j);
      if (c < 0 || c >= x.cols())
        throw ShapeError("gather_cols: column " + std::to_string(c) +
                         " outside " + shape_string(x));
      out(i, j) = x.value()(i, c);
    }
  return make_result(std::move(out), {x}, [index](Node& self) {
    Node& nx = *self.inputs[0];
    Matrix g = Matrix::Zero(nx.value.rows(), nx.value.cols());
    for (Eigen::Index i = 0; i < index.rows(); ++i)
      for (Eigen::Index j = 0; j < index.cols(); ++j)
        g(i, index(i, j)) += self.grad(i, j);
    nx.accumulate(g);
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Eigen::Index total = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != parts[0].cols())
      throw ShapeError("concat_rows: column mismatch " + shape_string(parts[0]) +
                       " vs " + shape_string(p));
    total += p.rows();
  }
  Matrix out(total, parts[0].cols());
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_result(std::move(out), parts, [](Node& self) {
    Eigen::Index offset = 0;
    for (auto& in : self.inputs) {
      const Eigen::Index r = in->value.rows();
      if (in->requires_grad) in->accumulate(self.grad.middleRows(offset, r));
      offset += r;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Eigen::Index total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != parts[0].rows())
      throw ShapeError("concat_cols: row mismatch " + shape_string(parts[0]) +
                       " vs " + shape_string(p));
    total += p.cols();
  }
  Matrix out(parts[0].rows(), total);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_result(std::move(out), parts, [](Node& self) {
    Eigen::Index offset = 0;
    for (auto& in : self.inputs) {
      const Eigen::Index c = in->value.cols();
      if (in->requires_grad) in->accumulate(self.grad.middleCols(offset, c));
      offset += c;
    }
  });
}

Tensor slice_rows(const Tensor& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.rows())
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") outside " + shape_string(x));
  return make_result(x.value().middleRows(begin, count), {x},
                     [begin, count](Node& self) {
                       Node& nx = *self.inputs[0];
                       Matrix g = Matrix::Zero(nx.value.rows(), nx.value.cols());
                       g.middleRows(begin, count) = self.grad;
                       nx.accumulate(g);
                     });
}

Tensor slice_cols(const Tensor& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.cols())
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" +
                     std::to_string(count) + ") outside " + shape_string(x));
  return make_result(x.value().middleCols(begin, count), {x},
                     [begin, count](Node& self) {
                       Node& nx = *self.inputs[0];
                       Matrix g = Matrix::Zero(nx.value.rows(), nx.value.cols());
                       g.middleCols(begin, count) = self.grad;
                       nx.accumulate(g);
                     });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows() ||
      logits.rows() == 0)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_string(logits));
  const Matrix& z = logits.value();
  Matrix probs = kernels::masked_softmax_rows(z, Mask());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= z.cols())
      throw ShapeError("cross_entropy: target " + std::to_string(t) +
                       " outside vocabulary of " + std::to_string(z.cols()));
    const double row_max = z.row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) s += std::exp(z(i, j) - row_max);
    total += row_max + std::log(s) - z(i, t);
  }
  const double n = static_cast<double>(z.rows());
  Matrix out(1, 1);
  out(0, 0) = total / n;
  std::vector<int> tgt(targets.begin(), targets.end());
  return make_result(std::move(out), {logits},
                     [probs = std::move(probs), tgt = std::move(tgt), n](Node& self) {
                       Matrix g = probs;
                       for (std::size_t i = 0; i < tgt.size(); ++i)
                         g(static_cast<Eigen::Index>(i), tgt[i]) -= 1.0;
                       g *= self.grad(0, 0) / n;
                       self.inputs[0]->accumulate(g);
                     });
}

Tensor sum(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make_result(std::move(out), {x}, [](Node& self) {
    Node& nx = *self.inputs[0];
    nx.accumulate(Matrix::Constant(nx.value.rows(), nx.value.cols(), self.grad(0, 0)));
  });
}

Tensor detach(const Tensor& x) { return Tensor::constant(x.value()); }

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout: probability must be below 1");
  const double keep = 1.0 - p;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return mul(x, Tensor::constant(std::move(mask)));
}

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ShapeError("backward: loss must be 1x1, got " + shape_string(loss));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversing it gives a valid processing order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients from an earlier pass over a shared subgraph must
  // not leak into this one.
  for (Node* n : order)
    if (n->backward) {
      n->grad.resize(0, 0);
      n->has_grad = false;
    }

  loss.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

}  // namespace entsum
