/* Copyright 2026 The vsrcap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vsrcap/autodiff.hpp"

#include <cmath>

#include "vsrcap/error.hpp"

namespace vsrcap::ad {

namespace {

enum class Broadcast { kSame, kColumn, kScalar };

Broadcast broadcast_kind(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  if (b.rows() == a.rows() && b.cols() == 1) return Broadcast::kColumn;
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + " vs " +
                  std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Matrix expand(const Matrix& b, Eigen::Index rows, Eigen::Index cols,
              Broadcast kind) {
  switch (kind) {
    case Broadcast::kSame: return b;
    case Broadcast::kColumn: return b.replicate(1, cols);
    case Broadcast::kScalar: return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

// Reduces an output-shaped gradient back to the operand's broadcast shape.
void accumulate_reduced(Matrix& target, const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::kSame: target += g; break;
    case Broadcast::kColumn: target += g.rowwise().sum(); break;
    case Broadcast::kScalar: target(0, 0) += g.sum(); break;
  }
}

Matrix row_logsumexp(const Matrix& a) {
  Vector m = a.rowwise().maxCoeff();
  Vector s = (a.colwise() - m).array().exp().rowwise().sum().matrix();
  return (m.array() + s.array().log()).matrix();
}

Matrix col_logsumexp(const Matrix& a) {
  Eigen::RowVectorXd m = a.colwise().maxCoeff();
  Eigen::RowVectorXd s =
      (a.rowwise() - m).array().exp().colwise().sum().matrix();
  return (m.array() + s.array().log()).matrix();
}

template <typename Forward, typename Derivative>
Var unary(const Var& a, Forward forward, Derivative derivative) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = forward(a.value());
  const bool ng = t.recording() && t.needs_grad(ia);
  return t.push(std::move(out), ng, [ia, derivative](Tape& tp, int self) {
    tp.grad(ia).array() +=
        tp.grad(self).array() * derivative(tp.value(ia), tp.value(self)).array();
  });
}

}  // namespace

Var Tape::constant(Matrix value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.needs_grad = recording_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad && recording_;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(const Var& root, double seed) {
  if (!recording_) {
    throw Error(ErrorCode::kInvalidInput, "backward on a non-recording tape");
  }
  if (root.rows() != 1 || root.cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward root must be 1x1");
  }
  if (!needs_grad(root.id())) return;
  grad(root.id())(0, 0) += seed;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.param && n.grad.size() > 0) n.param->grad += n.grad;
    n.grad.resize(0, 0);
  }
}

Var operator+(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const auto kind = broadcast_kind(a.value(), b.value(), "add");
  Matrix out = a.value() + expand(b.value(), a.rows(), a.cols(), kind);
  const int ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += g;
    if (tp.needs_grad(ib)) accumulate_reduced(tp.grad(ib), g, kind);
  });
}

Var operator-(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const auto kind = broadcast_kind(a.value(), b.value(), "sub");
  Matrix out = a.value() - expand(b.value(), a.rows(), a.cols(), kind);
  const int ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += g;
    if (tp.needs_grad(ib)) accumulate_reduced(tp.grad(ib), -g, kind);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  const auto kind = broadcast_kind(a.value(), b.value(), "mul");
  Matrix out =
      a.value().cwiseProduct(expand(b.value(), a.rows(), a.cols(), kind));
  const int ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Matrix& av = tp.value(ia);
    const Matrix& bv = tp.value(ib);
    if (tp.needs_grad(ia)) {
      tp.grad(ia) += g.cwiseProduct(expand(bv, av.rows(), av.cols(), kind));
    }
    if (tp.needs_grad(ib)) accumulate_reduced(tp.grad(ib), g.cwiseProduct(av), kind);
  });
}

Var operator*(const Var& a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() * s, t.needs_grad(ia), [ia, s](Tape& tp, int self) {
    tp.grad(ia) += tp.grad(self) * s;
  });
}

Var add_scalar(const Var& a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().array() + s;
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, int self) {
    tp.grad(ia) += tp.grad(self);
  });
}

Var neg(const Var& a) { return a * -1.0; }

Var matmul(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "matmul " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " by " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  Tape& t = *a.tape();
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "matmul_tn row mismatch");
  }
  Matrix out = a.value().transpose() * b.value();
  const int ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(ia) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia).noalias() += tp.value(ib) * g.transpose();
    if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia) * g;
  });
}

Var transpose(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().transpose(), t.needs_grad(ia),
                [ia](Tape& tp, int self) {
                  tp.grad(ia) += tp.grad(self).transpose();
                });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return (1.0 / (1.0 + (-x.array()).exp())).matrix();
      },
      [](const Matrix&, const Matrix& y) -> Matrix {
        return (y.array() * (1.0 - y.array())).matrix();
      });
}

Var tanh(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix {
        return (1.0 - y.array().square()).matrix();
      });
}

Var relu(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var exp(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log().matrix(); },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return x.array().inverse().matrix();
      });
}

Var log_sigmoid(const Var& a) {
  // log sigmoid(x) = -softplus(-x)
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) {
          return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
        });
      },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (1.0 / (1.0 + x.array().exp())).matrix();
      });
}

Var log_one_minus_sigmoid(const Var& a) {
  // log(1 - sigmoid(x)) = -softplus(x)
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) {
          return v >= 0 ? -v - std::log1p(std::exp(-v)) : -std::log1p(std::exp(v));
        });
      },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (-1.0 / (1.0 + (-x.array()).exp())).matrix();
      });
}

Var softmax_cols(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = (a.value().rowwise() - col_logsumexp(a.value()).row(0))
                   .array()
                   .exp()
                   .matrix();
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    Eigen::RowVectorXd dot = (g.cwiseProduct(y)).colwise().sum();
    tp.grad(ia) += (y.array() * (g.rowwise() - dot).array()).matrix();
  });
}

Var log_softmax_cols(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().rowwise() - col_logsumexp(a.value()).row(0);
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    Eigen::RowVectorXd gs = g.colwise().sum();
    Matrix p = y.array().exp().matrix();
    tp.grad(ia) += g - (p.array().rowwise() * gs.array()).matrix();
  });
}

Var logsumexp_cols(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = col_logsumexp(a.value());
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, int self) {
    const Matrix& x = tp.value(ia);
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    Matrix p = (x.rowwise() - y.row(0)).array().exp().matrix();
    tp.grad(ia) += (p.array().rowwise() * g.row(0).array()).matrix();
  });
}

Var log_normalize_rows(const Var& a, double log_floor) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Vector lse = row_logsumexp(a.value()).col(0);
  Eigen::Array<bool, Eigen::Dynamic, 1> floored = lse.array() < log_floor;
  lse = lse.cwiseMax(log_floor);
  Matrix out = a.value().colwise() - lse;
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, floored](Tape& tp, int self) {
                  const Matrix& y = tp.value(self);
                  const Matrix& g = tp.grad(self);
                  Vector gs = g.rowwise().sum();
                  for (Eigen::Index i = 0; i < gs.size(); ++i) {
                    if (floored(i)) gs(i) = 0.0;
                  }
                  Matrix p = y.array().exp().matrix();
                  tp.grad(ia) += g - (p.array().colwise() * gs.array()).matrix();
                });
}

Var log_normalize_cols(const Var& a, double log_floor) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Eigen::RowVectorXd lse = col_logsumexp(a.value()).row(0);
  Eigen::Array<bool, 1, Eigen::Dynamic> floored = lse.array() < log_floor;
  lse = lse.cwiseMax(log_floor);
  Matrix out = a.value().rowwise() - lse;
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, floored](Tape& tp, int self) {
                  const Matrix& y = tp.value(self);
                  const Matrix& g = tp.grad(self);
                  Eigen::RowVectorXd gs = g.colwise().sum();
                  for (Eigen::Index j = 0; j < gs.size(); ++j) {
                    if (floored(j)) gs(j) = 0.0;
                  }
                  Matrix p = y.array().exp().matrix();
                  tp.grad(ia) += g - (p.array().rowwise() * gs.array()).matrix();
                });
}

Var layer_norm_cols(const Var& x, const Var& gain, const Var& bias,
                    double eps) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const auto n = static_cast<double>(xv.rows());
  Eigen::RowVectorXd mean = xv.colwise().mean();
  Matrix centered = xv.rowwise() - mean;
  Eigen::RowVectorXd inv_std =
      ((centered.array().square().colwise().sum() / n) + eps).rsqrt().matrix();
  Matrix xhat = (centered.array().rowwise() * inv_std.array()).matrix();
  Matrix out = ((xhat.array().colwise() * gain.value().col(0).array())
                    .colwise() +
                bias.value().col(0).array())
                   .matrix();
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool ng = t.needs_grad(ix) || t.needs_grad(ig) || t.needs_grad(ib);
  return t.push(
      std::move(out), ng,
      [ix, ig, ib, xhat, inv_std](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        if (tp.needs_grad(ig)) tp.grad(ig) += g.cwiseProduct(xhat).rowwise().sum();
        if (tp.needs_grad(ib)) tp.grad(ib) += g.rowwise().sum();
        if (tp.needs_grad(ix)) {
          Matrix gx = (g.array().colwise() * tp.value(ig).col(0).array()).matrix();
          Eigen::RowVectorXd m1 = gx.colwise().mean();
          Eigen::RowVectorXd m2 = gx.cwiseProduct(xhat).colwise().mean();
          Matrix d = gx.rowwise() - m1;
          d -= (xhat.array().rowwise() * m2.array()).matrix();
          tp.grad(ix) += (d.array().rowwise() * inv_std.array()).matrix();
        }
      });
}

Var sum(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.push(std::move(out), t.needs_grad(ia), [ia](Tape& tp, int self) {
    tp.grad(ia).array() += tp.grad(self)(0, 0);
  });
}

Var mean_cols(const Var& a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  const auto cols = a.cols();
  Matrix out = a.value().rowwise().mean();
  return t.push(std::move(out), t.needs_grad(ia), [ia, cols](Tape& tp, int self) {
    tp.grad(ia).colwise() += tp.grad(self).col(0) / static_cast<double>(cols);
  });
}

Var pick(const Var& a, Eigen::Index r, Eigen::Index c) {
  Tape& t = *a.tape();
  if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "pick out of range");
  }
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value()(r, c);
  return t.push(std::move(out), t.needs_grad(ia), [ia, r, c](Tape& tp, int self) {
    tp.grad(ia)(r, c) += tp.grad(self)(0, 0);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat of nothing");
  Tape& t = *parts.front().tape();
  const auto cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool ng = false;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw Error(ErrorCode::kShapeMismatch, "concat_rows column mismatch");
    }
    rows += p.rows();
    ng = ng || t.needs_grad(p.id());
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.rows();
  }
  return t.push(std::move(out), ng, [layout](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (const auto& [id, off] : layout) {
      if (!tp.needs_grad(id)) continue;
      Matrix& dst = tp.grad(id);
      dst += g.middleRows(off, dst.rows());
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat of nothing");
  Tape& t = *parts.front().tape();
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw Error(ErrorCode::kShapeMismatch, "concat_cols row mismatch");
    }
    cols += p.cols();
    ng = ng || t.needs_grad(p.id());
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return t.push(std::move(out), ng, [layout](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (const auto& [id, off] : layout) {
      if (!tp.needs_grad(id)) continue;
      Matrix& dst = tp.grad(id);
      dst += g.middleCols(off, dst.cols());
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = *a.tape();
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "slice_rows out of range");
  }
  const int ia = a.id();
  Matrix out = a.value().middleRows(start, count);
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, start, count](Tape& tp, int self) {
                  tp.grad(ia).middleRows(start, count) += tp.grad(self);
                });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = *a.tape();
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "slice_cols out of range");
  }
  const int ia = a.id();
  Matrix out = a.value().middleCols(start, count);
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, start, count](Tape& tp, int self) {
                  tp.grad(ia).middleCols(start, count) += tp.grad(self);
                });
}

}  // namespace vsrcap::ad
