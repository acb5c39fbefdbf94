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

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation applied to Vars; Tape::backward walks the
// record in reverse and accumulates gradients into the Parameters that were
// read during the forward pass. Column vectors are the unit of data: a batch
// of tokens or regions is a matrix whose columns are the items.

#ifndef VSRCAP_AUTODIFF_HPP_
#define VSRCAP_AUTODIFF_HPP_

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vsrcap::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Parameter {
 public:
  Parameter(std::string name, Matrix value)
      : name_(std::move(name)),
        value(std::move(value)),
        grad(Matrix::Zero(this->value.rows(), this->value.cols())) {}

  const std::string& name() const { return name_; }
  void zero_grad() { grad.setZero(); }

 private:
  std::string name_;

 public:
  Matrix value;
  Matrix grad;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  // A non-recording tape evaluates values only; no closures are stored and
  // backward() is unavailable.
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Each parameter is bound once per tape and read in place.
  Var param(Parameter& p);

  // Seeds d(root)/d(root) with `seed` (root must be 1x1) and accumulates into
  // Parameter::grad.
  void backward(const Var& root, double seed = 1.0);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-implementation interface.
  Var push(Matrix value, bool needs_grad, Backward backward);
  const Matrix& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool needs_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].needs_grad;
  }
  Matrix& grad(int id);
  bool has_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].grad.size() > 0;
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
  };

  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_ids_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Broadcasting for the binary elementwise ops: the right operand may have
// the same shape, be a column (rows x 1) repeated across columns, or be 1x1.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var operator*(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);
// a^T * b without materializing the transpose.
Var matmul_tn(const Var& a, const Var& b);
Var transpose(const Var& a);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);

// Column-wise reductions and normalizations.
Var softmax_cols(const Var& a);
Var log_softmax_cols(const Var& a);
Var logsumexp_cols(const Var& a);  // 1 x cols
// a - logsumexp over each row / column; the logsumexp is clamped from below
// at log_floor (an additive floor on the normalizer before the log).
Var log_normalize_rows(const Var& a, double log_floor = -1e300);
Var log_normalize_cols(const Var& a, double log_floor = -1e300);
Var layer_norm_cols(const Var& x, const Var& gain, const Var& bias,
                    double eps = 1e-5);

Var sum(const Var& a);                 // 1 x 1
Var mean_cols(const Var& a);           // rows x 1, mean over columns
Var pick(const Var& a, Eigen::Index r, Eigen::Index c);  // 1 x 1

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);

// Numerically stable log(sigmoid(x)) and log(1 - sigmoid(x)) for BCE terms.
Var log_sigmoid(const Var& a);
Var log_one_minus_sigmoid(const Var& a);

}  // namespace vsrcap::ad

#endif  // VSRCAP_AUTODIFF_HPP_
