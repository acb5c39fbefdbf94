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

// Grounded semantic role labeling: scores every (role, proposal set) pair
// and picks the top-n sets per role.

#ifndef VSRCAP_GSRL_HPP_
#define VSRCAP_GSRL_HPP_

#include <map>
#include <random>
#include <string>
#include <vector>

#include "vsrcap/nn.hpp"
#include "vsrcap/scene.hpp"

namespace vsrcap {

struct GsrlConfig {
  int d_v = 64;
  int d_vb = 32;  // verb embedding
  int d_s = 32;   // role embedding
  int d_a = 64;   // fused dimension; scorer widths d_a, d_a/2, d_a/4, 1
};

struct GroundingResult {
  std::vector<RoleId> roles;  // row order of `scores`
  Eigen::MatrixXd scores;     // roles x sets, a_ij in (0,1)
  // Chosen sets per role, descending score; sub-role k gets chosen[k-1].
  std::map<RoleId, std::vector<int>> chosen;
  std::map<SubRole, int> assignment;
  std::map<SubRole, double> assignment_score;
};

class GsrlModel {
 public:
  GsrlModel(const GsrlConfig& config, std::vector<std::string> verbs,
            std::uint64_t seed);

  const GsrlConfig& config() const { return config_; }
  nn::ParameterStore& store() { return store_; }
  const std::vector<std::string>& verbs() const { return verbs_; }
  int verb_id(const std::string& verb) const;  // throws kUnknownVerb

  // Pre-logistic scores, 1 x (roles * sets), column r * sets + j.
  ad::Var logits(ad::Tape& t, int verb, const std::vector<RoleId>& roles,
                 const Eigen::VectorXd& global,
                 const Eigen::MatrixXd& set_features) const;
  double score_pair(int verb, RoleId role, const Eigen::VectorXd& global,
                    const Eigen::VectorXd& set_feature) const;
  Eigen::MatrixXd score_matrix(int verb, const std::vector<RoleId>& roles,
                               const Eigen::VectorXd& global,
                               const Eigen::MatrixXd& set_features) const;

  // Raw parameter access for reference implementations.
  const ad::Matrix& verb_table() const { return verb_emb_.table().value; }
  const ad::Matrix& role_table() const { return role_emb_.table().value; }
  const ad::Matrix& w_q() const { return w_q_.weight().value; }
  const ad::Matrix& w_f() const { return w_f_.weight().value; }

 private:
  GsrlConfig config_;
  std::vector<std::string> verbs_;
  nn::ParameterStore store_;
  std::mt19937_64 rng_;
  nn::Embedding verb_emb_;
  nn::Embedding role_emb_;
  nn::Linear w_q_;
  nn::Linear w_f_;
  nn::Mlp scorer_;
};

// Pooled set features of a sample as d_v x N.
Eigen::MatrixXd pooled_set_matrix(const SceneSample& sample);

// Top-n_i sets per role, ties to the lower set index. Throws kNotEnoughSets.
GroundingResult select_top_sets(const std::vector<RoleId>& roles,
                                const std::vector<int>& counts,
                                const Eigen::MatrixXd& scores);
GroundingResult ground(const GsrlModel& model, const SceneSample& sample,
                       const Vsr& vsr);

// Sum of elementwise binary cross-entropies. Throws kShapeMismatch.
double gsrl_loss(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels);
// Same loss on pre-logistic scores laid out as GsrlModel::logits.
ad::Var gsrl_loss_logits(const ad::Var& logits, const Eigen::MatrixXd& labels);
// a*_ij = 1 iff set j grounds some sub-role of role i.
Eigen::MatrixXd gsrl_labels(const SceneSample& sample,
                            const std::vector<RoleId>& roles);

struct GsrlTrainOptions {
  int epochs = 20;
  int batch = 32;
  double lr = 1e-5;
  double lr_decay = 0.5;
  int lr_every = 3;
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double val_metric = 0;
  double lr = 0;
};

// Fraction of (sample, role) pairs whose best-scoring set is one of the
// role's ground-truth sets.
double gsrl_top1_accuracy(const GsrlModel& model,
                          const std::vector<SceneSample>& samples);

std::vector<EpochLog> train_gsrl(GsrlModel& model,
                                 const std::vector<SceneSample>& train,
                                 const std::vector<SceneSample>& val,
                                 const GsrlTrainOptions& options);

}  // namespace vsrcap

#endif  // VSRCAP_GSRL_HPP_
