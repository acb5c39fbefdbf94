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

// Layers, parameter ownership and the Adam optimizer shared by all models.

#ifndef VSRCAP_NN_HPP_
#define VSRCAP_NN_HPP_

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vsrcap/autodiff.hpp"

namespace vsrcap::nn {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

// Owns parameters at stable addresses; names are unique within a store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& create(const std::string& name, Matrix init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  void zero_grad();
  std::size_t scalar_count() const;
  // Copies values from another store with identical names and shapes.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Glorot-uniform initialization for a rows x cols weight.
Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev,
                std::mt19937_64& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out,
         std::mt19937_64& rng, bool bias = true);

  Var operator()(Tape& t, const Var& x) const;
  Parameter& weight() const { return *weight_; }
  int in() const { return static_cast<int>(weight_->value.cols()); }
  int out() const { return static_cast<int>(weight_->value.rows()); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

// Embedding table stored as dim x vocab; lookup returns a dim x 1 column.
class Embedding {
 public:
  Embedding() = default;
  Embedding(ParameterStore& store, const std::string& name, int vocab, int dim,
            std::mt19937_64& rng);

  Var operator()(Tape& t, int id) const;
  int vocab() const { return static_cast<int>(table_->value.cols()); }
  int dim() const { return static_cast<int>(table_->value.rows()); }
  Parameter& table() const { return *table_; }

 private:
  Parameter* table_ = nullptr;
};

enum class Activation { kRelu, kTanh, kNone };

// Stack of Linear layers with a hidden activation between them; the last
// layer's output is returned without activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name,
      const std::vector<int>& widths, std::mt19937_64& rng,
      Activation hidden = Activation::kRelu);

  Var operator()(Tape& t, const Var& x) const;
  std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<Linear> layers_;
  Activation hidden_ = Activation::kRelu;
};

struct LstmState {
  Var h;
  Var c;
};

class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& name, int input,
           int hidden, std::mt19937_64& rng);

  LstmState operator()(Tape& t, const Var& x, const LstmState& prev) const;
  LstmState zero_state(Tape& t) const;
  int hidden() const { return hidden_; }
  int input() const { return input_; }

 private:
  Parameter* w_x_ = nullptr;
  Parameter* w_h_ = nullptr;
  Parameter* bias_ = nullptr;
  int input_ = 0;
  int hidden_ = 0;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

class Adam {
 public:
  Adam(ParameterStore& store, AdamOptions options);

  // Applies one update from the accumulated gradients (scaled by
  // grad_scale) and zeroes them.
  void step(double grad_scale = 1.0);
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamOptions options_;
  long t_ = 0;
};

// Step learning-rate schedule: base * factor^(epoch / every).
double step_decay(double base, double factor, int every, int epoch);

}  // namespace vsrcap::nn

#endif  // VSRCAP_NN_HPP_
