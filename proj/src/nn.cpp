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

#include "vsrcap/nn.hpp"

#include <cmath>

#include "vsrcap/error.hpp"

namespace vsrcap::nn {

Parameter& ParameterStore::create(const std::string& name, Matrix init) {
  if (find(name)) {
    throw Error(ErrorCode::kInvalidInput, "duplicate parameter " + name);
  }
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name() == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name() == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  for (auto& p : params_) {
    const Parameter* src = other.find(p->name());
    if (!src || src->value.rows() != p->value.rows() ||
        src->value.cols() != p->value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "cannot copy " + p->name());
    }
    p->value = src->value;
  }
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev,
                std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out,
               std::mt19937_64& rng, bool bias) {
  weight_ = &store.create(name + ".weight", glorot(out, in, rng));
  if (bias) bias_ = &store.create(name + ".bias", Matrix::Zero(out, 1));
}

Var Linear::operator()(Tape& t, const Var& x) const {
  Var y = ad::matmul(t.param(*weight_), x);
  if (bias_) y = y + t.param(*bias_);
  return y;
}

Embedding::Embedding(ParameterStore& store, const std::string& name, int vocab,
                     int dim, std::mt19937_64& rng) {
  table_ = &store.create(name, gaussian(dim, vocab, 0.3, rng));
}

Var Embedding::operator()(Tape& t, int id) const {
  if (id < 0 || id >= vocab()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding id " + std::to_string(id) + " outside vocab " +
                    std::to_string(vocab()));
  }
  return ad::slice_cols(t.param(*table_), id, 1);
}

Mlp::Mlp(ParameterStore& store, const std::string& name,
         const std::vector<int>& widths, std::mt19937_64& rng,
         Activation hidden)
    : hidden_(hidden) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), widths[i],
                         widths[i + 1], rng);
  }
}

Var Mlp::operator()(Tape& t, const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](t, h);
    if (i + 1 < layers_.size()) {
      switch (hidden_) {
        case Activation::kRelu: h = ad::relu(h); break;
        case Activation::kTanh: h = ad::tanh(h); break;
        case Activation::kNone: break;
      }
    }
  }
  return h;
}

LstmCell::LstmCell(ParameterStore& store, const std::string& name, int input,
                   int hidden, std::mt19937_64& rng)
    : input_(input), hidden_(hidden) {
  w_x_ = &store.create(name + ".w_x", glorot(4 * hidden, input, rng));
  w_h_ = &store.create(name + ".w_h", glorot(4 * hidden, hidden, rng));
  Matrix b = Matrix::Zero(4 * hidden, 1);
  b.middleRows(hidden, hidden).setOnes();  // forget-gate bias
  bias_ = &store.create(name + ".bias", std::move(b));
}

LstmState LstmCell::zero_state(Tape& t) const {
  return {t.constant(Matrix::Zero(hidden_, 1)),
          t.constant(Matrix::Zero(hidden_, 1))};
}

// Gate layout in the 4H pre-activation: input, forget, cell candidate, output.
LstmState LstmCell::operator()(Tape& t, const Var& x,
                               const LstmState& prev) const {
  if (x.rows() != input_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "lstm input " + std::to_string(x.rows()) + " != " +
                    std::to_string(input_));
  }
  Var pre = ad::matmul(t.param(*w_x_), x) + ad::matmul(t.param(*w_h_), prev.h) +
            t.param(*bias_);
  const int h = hidden_;
  Var i = ad::sigmoid(ad::slice_rows(pre, 0, h));
  Var f = ad::sigmoid(ad::slice_rows(pre, h, h));
  Var g = ad::tanh(ad::slice_rows(pre, 2 * h, h));
  Var o = ad::sigmoid(ad::slice_rows(pre, 3 * h, h));
  Var c = ad::mul(f, prev.c) + ad::mul(i, g);
  Var hh = ad::mul(o, ad::tanh(c));
  return {hh, c};
}

Adam::Adam(ParameterStore& store, AdamOptions options)
    : params_(store.all()), options_(options) {
  for (auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(double grad_scale) {
  ++t_;
  double scale = grad_scale;
  if (options_.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto* p : params_) sq += p->grad.squaredNorm();
    const double norm = std::sqrt(sq) * std::abs(grad_scale);
    if (norm > options_.clip_norm) scale *= options_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    Matrix g = p.grad * scale;
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * g;
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * g.cwiseAbs2();
    p.value.array() -= options_.lr * (m_[k].array() / bc1) /
                       ((v_[k].array() / bc2).sqrt() + options_.eps);
    p.zero_grad();
  }
}

double step_decay(double base, double factor, int every, int epoch) {
  if (every <= 0) return base;
  return base * std::pow(factor, static_cast<double>(epoch / every));
}

}  // namespace vsrcap::nn
