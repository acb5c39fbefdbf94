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

// Semantic structure planner. The S-level model orders the verb and the VSR
// roles with a masked encoder-decoder transformer; the R-level model orders
// the sub-roles of a multi-count role from their grounded sets with a
// Sinkhorn-normalized score matrix.

#ifndef VSRCAP_SSP_HPP_
#define VSRCAP_SSP_HPP_

#include <random>
#include <string>
#include <vector>

#include "vsrcap/gsrl.hpp"
#include "vsrcap/nn.hpp"
#include "vsrcap/scene.hpp"

namespace vsrcap {

struct SLevelConfig {
  int d_model = 64;
  int heads = 8;
  int enc_layers = 3;
  int dec_layers = 3;
  int d_ff = 128;
  int max_len = 10;
};

struct RLevelConfig {
  int d_v = 64;
  int d_r = 32;       // visual projection
  int d_c = 16;       // class embedding
  int hidden = 64;    // MLP_b hidden width
  int n_max = 10;
  int num_classes = 1;
  int sinkhorn_iters = 20;
  double pad_off = -30.0;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(nn::ParameterStore& store, const std::string& name, int d_model,
                     int heads, std::mt19937_64& rng);
  // query: d x nq, memory: d x nk; mask (nk x nq) is added to the scores.
  ad::Var operator()(ad::Tape& t, const ad::Var& query, const ad::Var& memory,
                     const ad::Matrix* mask) const;

 private:
  nn::Linear q_, k_, v_, o_;
  int heads_ = 1;
  int d_model_ = 0;
};

struct BeamOrder {
  std::vector<RoleId> order;
  double log_prob = 0;
};

class SLevelModel {
 public:
  static constexpr int kBosToken = kRoleVocabSize;

  SLevelModel(const SLevelConfig& config, std::vector<std::string> verbs,
              std::uint64_t seed);
  const SLevelConfig& config() const { return config_; }
  nn::ParameterStore& store() { return store_; }
  int verb_id(const std::string& verb) const;

  // Masked log-probabilities (kRoleVocabSize x T) for decoding `target`
  // after `prefix_length` teacher-forced tokens; column t excludes every
  // token outside `inputs` and every token already in target[0..t).
  ad::Var teacher_log_probs(ad::Tape& t, int verb, const std::vector<RoleId>& inputs,
                            const std::vector<RoleId>& target) const;
  // Input tokens are the VSR roles plus the verb marker.
  std::vector<RoleId> plan_role_order(const Vsr& vsr) const;
  std::vector<BeamOrder> plan_role_order_beam(const Vsr& vsr, int beam) const;

 private:
  ad::Var encode(ad::Tape& t, int verb, const std::vector<RoleId>& inputs) const;
  ad::Var decode(ad::Tape& t, const ad::Var& memory,
                 const std::vector<int>& tokens) const;
  std::vector<RoleId> input_tokens(const Vsr& vsr) const;
  ad::Matrix mask_column(const std::vector<RoleId>& inputs,
                         const std::vector<RoleId>& emitted) const;

  struct Block {
    MultiHeadAttention self_attn;
    MultiHeadAttention cross_attn;
    nn::Linear ff1, ff2;
    ad::Parameter* ln1_g = nullptr;
    ad::Parameter* ln1_b = nullptr;
    ad::Parameter* ln2_g = nullptr;
    ad::Parameter* ln2_b = nullptr;
    ad::Parameter* ln3_g = nullptr;
    ad::Parameter* ln3_b = nullptr;
  };

  Block make_block(const std::string& name, bool cross);
  ad::Var ln(ad::Tape& t, const ad::Var& x, ad::Parameter* g, ad::Parameter* b) const;

  SLevelConfig config_;
  std::vector<std::string> verbs_;
  nn::ParameterStore store_;
  std::mt19937_64 rng_;
  nn::Embedding in_verb_, in_role_, out_role_;
  nn::Linear fc_a_;
  std::vector<Block> enc_, dec_;
  ad::Parameter* enc_ln_g_ = nullptr;
  ad::Parameter* enc_ln_b_ = nullptr;
  ad::Parameter* dec_ln_g_ = nullptr;
  ad::Parameter* dec_ln_b_ = nullptr;
  nn::Linear out_;
};

class RLevelModel {
 public:
  RLevelModel(const RLevelConfig& config, std::uint64_t seed);
  const RLevelConfig& config() const { return config_; }
  nn::ParameterStore& store() { return store_; }

  // Mean-pooled per-set codes, n_max x |sets|.
  ad::Var set_codes(ad::Tape& t, const SceneSample& sample,
                    const std::vector<int>& sets) const;
  // Padded n_max x n_max log-potentials: the top-left block holds
  // Z(j, k) = code_j(k); the padding block has 0 on its diagonal and
  // pad_off elsewhere, as does the off-block.
  ad::Var potentials(ad::Tape& t, const SceneSample& sample,
                     const std::vector<int>& sets) const;
  ad::Var soft_permutation(ad::Tape& t, const SceneSample& sample,
                           const std::vector<int>& sets) const;
  // Sets reordered so that element k is the set placed at sub-role k+1.
  // Throws kTooManySets when more than n_max sets are given.
  std::vector<int> rank_within_role(const SceneSample& sample,
                                    const std::vector<int>& sets) const;

 private:
  RLevelConfig config_;
  nn::ParameterStore store_;
  std::mt19937_64 rng_;
  nn::Linear w_rv_;
  nn::Embedding class_emb_;
  nn::Mlp mlp_b_;
};

// Box position feature (x_min/W, y_min/H, x_max/W, y_max/H).
Eigen::Vector4d position_feature(const Box& b, double image_width, double image_height);

// Hard permutation block for `n` sets read from a padded soft matrix:
// result[j] is the position of set j.
std::vector<int> round_block(const Eigen::MatrixXd& soft, int n);

struct PlanResult {
  SemanticStructure structure;
  std::vector<int> sets;  // grounded set per sub-role, -1 for the verb
  std::vector<RoleId> role_order;
};

PlanResult plan_with_order(const RLevelModel& r_level, const Vsr& vsr,
                           const GroundingResult& grounding, const SceneSample& sample,
                           const std::vector<RoleId>& role_order);
PlanResult plan(const SLevelModel& s_level, const RLevelModel& r_level, const Vsr& vsr,
                const GroundingResult& grounding, const SceneSample& sample);

// Grounded features of a plan: the verb slot carries the global feature,
// every other slot the member features of its set (d_v x members).
std::vector<Eigen::MatrixXd> plan_regions(const PlanResult& plan,
                                          const SceneSample& sample);
std::vector<Eigen::VectorXd> plan_pooled(const PlanResult& plan,
                                         const SceneSample& sample);

struct SspLosses {
  double s_level = 0;
  double r_level = 0;
};

// probs: vocab x T; targets: token per column.
double s_level_loss(const Eigen::MatrixXd& probs, const std::vector<int>& targets);
double r_level_loss(const std::vector<Eigen::MatrixXd>& predicted,
                    const std::vector<Eigen::MatrixXd>& target,
                    const std::vector<int>& counts);
SspLosses ssp_losses(const Eigen::MatrixXd& s_probs, const std::vector<int>& s_targets,
                     const std::vector<Eigen::MatrixXd>& p_pred,
                     const std::vector<Eigen::MatrixXd>& p_gt,
                     const std::vector<int>& counts);

// Ground-truth sets of `role` in ascending set index and the padded target
// P*(j, k) = 1 iff the j-th of those sets is mentioned at position k.
std::vector<int> r_level_input_sets(const SceneSample& sample, RoleId role);
Eigen::MatrixXd r_level_target(const SceneSample& sample, RoleId role, int n_max);

struct SspTrainOptions {
  int epochs = 20;
  int batch = 32;
  double lr = 1e-4;
  double lr_decay = 0.6;
  int lr_every = 3;
  std::uint64_t seed = 0;
};

// Validation metrics are exact role-order accuracy and the fraction of
// multi-count roles ranked in mention order.
std::vector<EpochLog> train_s_level(SLevelModel& model,
                                    const std::vector<SceneSample>& train,
                                    const std::vector<SceneSample>& val,
                                    const SspTrainOptions& options);
std::vector<EpochLog> train_r_level(RLevelModel& model,
                                    const std::vector<SceneSample>& train,
                                    const std::vector<SceneSample>& val,
                                    const SspTrainOptions& options);
double s_level_accuracy(const SLevelModel& model, const std::vector<SceneSample>& samples);
double r_level_accuracy(const RLevelModel& model, const std::vector<SceneSample>& samples);

}  // namespace vsrcap

#endif  // VSRCAP_SSP_HPP_
