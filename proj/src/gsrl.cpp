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

#include "vsrcap/gsrl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsrcap/error.hpp"

namespace vsrcap {

GsrlModel::GsrlModel(const GsrlConfig& config, std::vector<std::string> verbs,
                     std::uint64_t seed)
    : config_(config), verbs_(std::move(verbs)), rng_(seed) {
  if (verbs_.empty()) throw Error(ErrorCode::kInvalidInput, "no verbs");
  const int d_a = config_.d_a;
  verb_emb_ = nn::Embedding(store_, "gsrl.verb_emb", static_cast<int>(verbs_.size()),
                            config_.d_vb, rng_);
  role_emb_ = nn::Embedding(store_, "gsrl.role_emb", kRoleVocabSize, config_.d_s, rng_);
  w_q_ = nn::Linear(store_, "gsrl.w_q", config_.d_vb + config_.d_s + config_.d_v,
                    d_a, rng_, false);
  w_f_ = nn::Linear(store_, "gsrl.w_f", config_.d_v, d_a, rng_, false);
  scorer_ = nn::Mlp(store_, "gsrl.scorer",
                    {d_a, d_a, std::max(1, d_a / 2), std::max(1, d_a / 4), 1}, rng_);
}

int GsrlModel::verb_id(const std::string& verb) const {
  auto it = std::find(verbs_.begin(), verbs_.end(), verb);
  if (it == verbs_.end()) throw Error(ErrorCode::kUnknownVerb, verb);
  return static_cast<int>(it - verbs_.begin());
}

ad::Var GsrlModel::logits(ad::Tape& t, int verb, const std::vector<RoleId>& roles,
                          const Eigen::VectorXd& global,
                          const Eigen::MatrixXd& set_features) const {
  if (global.size() != config_.d_v || set_features.rows() != config_.d_v) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gsrl expects features of dimension " + std::to_string(config_.d_v));
  }
  ad::Var ev = verb_emb_(t, verb);
  ad::Var g = t.constant(global);
  ad::Var f = w_f_(t, t.constant(set_features));  // d_a x N
  std::vector<ad::Var> fused;
  for (RoleId r : roles) {
    ad::Var q = w_q_(t, ad::concat_rows({ev, role_emb_(t, r), g}));
    fused.push_back(ad::mul(f, q));
  }
  return scorer_(t, ad::concat_cols(fused));
}

Eigen::MatrixXd GsrlModel::score_matrix(int verb, const std::vector<RoleId>& roles,
                                        const Eigen::VectorXd& global,
                                        const Eigen::MatrixXd& set_features) const {
  ad::Tape t(false);
  const ad::Matrix z = logits(t, verb, roles, global, set_features).value();
  const Eigen::Index n = set_features.cols();
  Eigen::MatrixXd s(static_cast<Eigen::Index>(roles.size()), n);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (Eigen::Index j = 0; j < n; ++j) {
      s(r, j) = 1.0 / (1.0 + std::exp(-z(0, r * n + j)));
    }
  }
  return s;
}

double GsrlModel::score_pair(int verb, RoleId role, const Eigen::VectorXd& global,
                             const Eigen::VectorXd& set_feature) const {
  return score_matrix(verb, {role}, global, set_feature)(0, 0);
}

Eigen::MatrixXd pooled_set_matrix(const SceneSample& sample) {
  Eigen::MatrixXd m(sample.d_v, static_cast<Eigen::Index>(sample.sets.size()));
  for (std::size_t j = 0; j < sample.sets.size(); ++j) {
    m.col(static_cast<Eigen::Index>(j)) = sample.sets[j].pooled;
  }
  return m;
}

GroundingResult select_top_sets(const std::vector<RoleId>& roles,
                                const std::vector<int>& counts,
                                const Eigen::MatrixXd& scores) {
  GroundingResult out;
  out.roles = roles;
  out.scores = scores;
  const int n = static_cast<int>(scores.cols());
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (counts[i] > n) {
      throw Error(ErrorCode::kNotEnoughSets,
                  std::string(role_name(roles[i])) + " needs " +
                      std::to_string(counts[i]) + " sets, image has " +
                      std::to_string(n));
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    const auto row = static_cast<Eigen::Index>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return scores(row, a) > scores(row, b);
    });
    idx.resize(static_cast<std::size_t>(counts[i]));
    for (int k = 0; k < counts[i]; ++k) {
      const SubRole sub{roles[i], k + 1};
      out.assignment[sub] = idx[static_cast<std::size_t>(k)];
      out.assignment_score[sub] = scores(row, idx[static_cast<std::size_t>(k)]);
    }
    out.chosen[roles[i]] = std::move(idx);
  }
  return out;
}

GroundingResult ground(const GsrlModel& model, const SceneSample& sample,
                       const Vsr& vsr) {
  std::vector<RoleId> roles;
  std::vector<int> counts;
  for (const auto& rc : vsr.roles) {
    roles.push_back(rc.role);
    counts.push_back(rc.count);
  }
  if (sample.sets.empty()) throw Error(ErrorCode::kNoProposals, sample.image_id);
  const Eigen::MatrixXd scores = model.score_matrix(
      model.verb_id(vsr.verb), roles, sample.global_feature, pooled_set_matrix(sample));
  return select_top_sets(roles, counts, scores);
}

double gsrl_loss(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in shape");
  }
  double loss = 0.0;
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const double p = scores(i, j);
      loss -= labels(i, j) > 0.5 ? std::log(p) : std::log1p(-p);
    }
  }
  return loss;
}

ad::Var gsrl_loss_logits(const ad::Var& logits, const Eigen::MatrixXd& labels) {
  if (logits.rows() != 1 || logits.cols() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "logits and labels differ in size");
  }
  const Eigen::Index n = labels.cols();
  ad::Matrix pos(1, logits.cols()), neg(1, logits.cols());
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool y = labels(r, j) > 0.5;
      pos(0, r * n + j) = y ? 1.0 : 0.0;
      neg(0, r * n + j) = y ? 0.0 : 1.0;
    }
  }
  ad::Tape& t = *logits.tape();
  ad::Var terms = ad::mul(ad::log_sigmoid(logits), t.constant(pos)) +
                  ad::mul(ad::log_one_minus_sigmoid(logits), t.constant(neg));
  return ad::neg(ad::sum(terms));
}

Eigen::MatrixXd gsrl_labels(const SceneSample& sample,
                            const std::vector<RoleId>& roles) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(roles.size()),
                                            static_cast<Eigen::Index>(sample.sets.size()));
  for (const auto& [sub, set] : sample.gt_grounding) {
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (roles[i] == sub.role) y(static_cast<Eigen::Index>(i), set) = 1.0;
    }
  }
  return y;
}

namespace {

std::vector<RoleId> vsr_roles(const Vsr& vsr) {
  std::vector<RoleId> r;
  for (const auto& rc : vsr.roles) r.push_back(rc.role);
  return r;
}

}  // namespace

double gsrl_top1_accuracy(const GsrlModel& model,
                          const std::vector<SceneSample>& samples) {
  long hits = 0, total = 0;
  for (const auto& s : samples) {
    const auto roles = vsr_roles(s.gt_vsr);
    const auto scores = model.score_matrix(model.verb_id(s.gt_vsr.verb), roles,
                                           s.global_feature, pooled_set_matrix(s));
    const auto labels = gsrl_labels(s, roles);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < scores.cols(); ++j) {
        if (scores(i, j) > scores(i, best)) best = j;
      }
      hits += labels(i, best) > 0.5 ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<EpochLog> train_gsrl(GsrlModel& model,
                                 const std::vector<SceneSample>& train,
                                 const std::vector<SceneSample>& val,
                                 const GsrlTrainOptions& options) {
  nn::Adam adam(model.store(), {options.lr, 0.9, 0.999, 1e-8, 5.0});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> logs;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_lr(nn::step_decay(options.lr, options.lr_decay, options.lr_every, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(options.batch));
      for (std::size_t k = b; k < end; ++k) {
        const SceneSample& s = train[order[k]];
        const auto roles = vsr_roles(s.gt_vsr);
        ad::Tape t;
        ad::Var z = model.logits(t, model.verb_id(s.gt_vsr.verb), roles,
                                 s.global_feature, pooled_set_matrix(s));
        ad::Var loss = gsrl_loss_logits(z, gsrl_labels(s, roles));
        total += loss.scalar();
        t.backward(loss);
      }
      adam.step(1.0 / static_cast<double>(end - b));
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total / static_cast<double>(std::max<std::size_t>(1, train.size()));
    log.val_metric = val.empty() ? 0.0 : gsrl_top1_accuracy(model, val);
    log.lr = adam.lr();
    logs.push_back(log);
  }
  return logs;
}

}  // namespace vsrcap
