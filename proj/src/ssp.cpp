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

#include "vsrcap/ssp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vsrcap/error.hpp"
#include "vsrcap/sinkhorn.hpp"

namespace vsrcap {

namespace {

constexpr double kMasked = -1e9;

ad::Matrix positional_encoding(int d, int n) {
  ad::Matrix pe(d, n);
  for (int p = 0; p < n; ++p) {
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
      pe(i, p) = (i % 2 == 0) ? std::sin(p * rate) : std::cos(p * rate);
    }
  }
  return pe;
}

ad::Matrix causal_mask(int n) {
  ad::Matrix m = ad::Matrix::Zero(n, n);
  for (int q = 0; q < n; ++q) {
    for (int k = q + 1; k < n; ++k) m(k, q) = kMasked;
  }
  return m;
}

}  // namespace

MultiHeadAttention::MultiHeadAttention(nn::ParameterStore& store, const std::string& name,
                                       int d_model, int heads, std::mt19937_64& rng)
    : q_(store, name + ".q", d_model, d_model, rng),
      k_(store, name + ".k", d_model, d_model, rng),
      v_(store, name + ".v", d_model, d_model, rng),
      o_(store, name + ".o", d_model, d_model, rng),
      heads_(heads),
      d_model_(d_model) {
  if (heads < 1 || d_model % heads != 0) {
    throw Error(ErrorCode::kInvalidInput, "model width must divide into heads");
  }
}

ad::Var MultiHeadAttention::operator()(ad::Tape& t, const ad::Var& query,
                                       const ad::Var& memory,
                                       const ad::Matrix* mask) const {
  const int dk = d_model_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  ad::Var q = q_(t, query), k = k_(t, memory), v = v_(t, memory);
  std::vector<ad::Var> outs;
  for (int h = 0; h < heads_; ++h) {
    ad::Var qh = ad::slice_rows(q, h * dk, dk);
    ad::Var kh = ad::slice_rows(k, h * dk, dk);
    ad::Var vh = ad::slice_rows(v, h * dk, dk);
    ad::Var scores = ad::matmul_tn(kh, qh) * scale;  // nk x nq
    if (mask) scores = scores + t.constant(*mask);
    outs.push_back(ad::matmul(vh, ad::softmax_cols(scores)));
  }
  return o_(t, heads_ == 1 ? outs[0] : ad::concat_rows(outs));
}

SLevelModel::SLevelModel(const SLevelConfig& config, std::vector<std::string> verbs,
                         std::uint64_t seed)
    : config_(config), verbs_(std::move(verbs)), rng_(seed) {
  const int d = config_.d_model;
  in_verb_ = nn::Embedding(store_, "slevel.in_verb", static_cast<int>(verbs_.size()), d, rng_);
  in_role_ = nn::Embedding(store_, "slevel.in_role", kRoleVocabSize, d, rng_);
  out_role_ = nn::Embedding(store_, "slevel.out_role", kRoleVocabSize + 1, d, rng_);
  fc_a_ = nn::Linear(store_, "slevel.fc_a", d, d, rng_);
  for (int l = 0; l < config_.enc_layers; ++l) {
    enc_.push_back(make_block("slevel.enc" + std::to_string(l), false));
  }
  for (int l = 0; l < config_.dec_layers; ++l) {
    dec_.push_back(make_block("slevel.dec" + std::to_string(l), true));
  }
  enc_ln_g_ = &store_.create("slevel.enc_ln.g", ad::Matrix::Ones(d, 1));
  enc_ln_b_ = &store_.create("slevel.enc_ln.b", ad::Matrix::Zero(d, 1));
  dec_ln_g_ = &store_.create("slevel.dec_ln.g", ad::Matrix::Ones(d, 1));
  dec_ln_b_ = &store_.create("slevel.dec_ln.b", ad::Matrix::Zero(d, 1));
  out_ = nn::Linear(store_, "slevel.out", d, kRoleVocabSize, rng_);
}

SLevelModel::Block SLevelModel::make_block(const std::string& name, bool cross) {
  const int d = config_.d_model;
  Block b;
  b.self_attn = MultiHeadAttention(store_, name + ".self", d, config_.heads, rng_);
  if (cross) b.cross_attn = MultiHeadAttention(store_, name + ".cross", d, config_.heads, rng_);
  b.ff1 = nn::Linear(store_, name + ".ff1", d, config_.d_ff, rng_);
  b.ff2 = nn::Linear(store_, name + ".ff2", config_.d_ff, d, rng_);
  b.ln1_g = &store_.create(name + ".ln1.g", ad::Matrix::Ones(d, 1));
  b.ln1_b = &store_.create(name + ".ln1.b", ad::Matrix::Zero(d, 1));
  b.ln2_g = &store_.create(name + ".ln2.g", ad::Matrix::Ones(d, 1));
  b.ln2_b = &store_.create(name + ".ln2.b", ad::Matrix::Zero(d, 1));
  if (cross) {
    b.ln3_g = &store_.create(name + ".ln3.g", ad::Matrix::Ones(d, 1));
    b.ln3_b = &store_.create(name + ".ln3.b", ad::Matrix::Zero(d, 1));
  }
  return b;
}

int SLevelModel::verb_id(const std::string& verb) const {
  auto it = std::find(verbs_.begin(), verbs_.end(), verb);
  if (it == verbs_.end()) throw Error(ErrorCode::kUnknownVerb, verb);
  return static_cast<int>(it - verbs_.begin());
}

ad::Var SLevelModel::ln(ad::Tape& t, const ad::Var& x, ad::Parameter* g,
                        ad::Parameter* b) const {
  return ad::layer_norm_cols(x, t.param(*g), t.param(*b));
}

ad::Var SLevelModel::encode(ad::Tape& t, int verb, const std::vector<RoleId>& inputs) const {
  ad::Var ev = in_verb_(t, verb);
  std::vector<ad::Var> cols;
  for (RoleId r : inputs) cols.push_back(ev + in_role_(t, r));
  ad::Var x = fc_a_(t, ad::concat_cols(cols));
  for (const auto& b : enc_) {
    ad::Var h = ln(t, x, b.ln1_g, b.ln1_b);
    x = x + b.self_attn(t, h, h, nullptr);
    h = ln(t, x, b.ln2_g, b.ln2_b);
    x = x + b.ff2(t, ad::relu(b.ff1(t, h)));
  }
  return ln(t, x, enc_ln_g_, enc_ln_b_);
}

ad::Var SLevelModel::decode(ad::Tape& t, const ad::Var& memory,
                            const std::vector<int>& tokens) const {
  const int n = static_cast<int>(tokens.size());
  std::vector<ad::Var> cols;
  for (int tok : tokens) cols.push_back(out_role_(t, tok));
  ad::Var x = ad::concat_cols(cols) + t.constant(positional_encoding(config_.d_model, n));
  const ad::Matrix mask = causal_mask(n);
  for (const auto& b : dec_) {
    ad::Var h = ln(t, x, b.ln1_g, b.ln1_b);
    x = x + b.self_attn(t, h, h, &mask);
    h = ln(t, x, b.ln3_g, b.ln3_b);
    x = x + b.cross_attn(t, h, memory, nullptr);
    h = ln(t, x, b.ln2_g, b.ln2_b);
    x = x + b.ff2(t, ad::relu(b.ff1(t, h)));
  }
  return out_(t, ln(t, x, dec_ln_g_, dec_ln_b_));  // vocab x n logits
}

ad::Matrix SLevelModel::mask_column(const std::vector<RoleId>& inputs,
                                    const std::vector<RoleId>& emitted) const {
  ad::Matrix m = ad::Matrix::Constant(kRoleVocabSize, 1, kMasked);
  for (RoleId r : inputs) m(r, 0) = 0.0;
  for (RoleId r : emitted) m(r, 0) = kMasked;
  return m;
}

ad::Var SLevelModel::teacher_log_probs(ad::Tape& t, int verb,
                                       const std::vector<RoleId>& inputs,
                                       const std::vector<RoleId>& target) const {
  ad::Var memory = encode(t, verb, inputs);
  std::vector<int> dec_in{kBosToken};
  for (std::size_t k = 0; k + 1 < target.size(); ++k) dec_in.push_back(target[k]);
  ad::Var logits = decode(t, memory, dec_in);
  ad::Matrix mask(kRoleVocabSize, static_cast<Eigen::Index>(target.size()));
  std::vector<RoleId> emitted;
  for (std::size_t k = 0; k < target.size(); ++k) {
    mask.col(static_cast<Eigen::Index>(k)) = mask_column(inputs, emitted);
    emitted.push_back(target[k]);
  }
  return ad::log_softmax_cols(logits + t.constant(mask));
}

std::vector<RoleId> SLevelModel::input_tokens(const Vsr& vsr) const {
  if (static_cast<int>(vsr.roles.size()) + 1 > config_.max_len) {
    throw Error(ErrorCode::kTooManyRoles,
                std::to_string(vsr.roles.size()) + " roles exceed the planner length " +
                    std::to_string(config_.max_len));
  }
  std::vector<RoleId> in;
  for (const auto& rc : vsr.roles) in.push_back(rc.role);
  in.push_back(kVerbRole);
  return in;
}

std::vector<RoleId> SLevelModel::plan_role_order(const Vsr& vsr) const {
  const auto best = plan_role_order_beam(vsr, 1);
  return best.front().order;
}

std::vector<BeamOrder> SLevelModel::plan_role_order_beam(const Vsr& vsr, int beam) const {
  if (beam < 1) throw Error(ErrorCode::kInvalidInput, "beam must be >= 1");
  const auto inputs = input_tokens(vsr);
  ad::Tape t(false);
  const ad::Matrix memory_value = encode(t, verb_id(vsr.verb), inputs).value();
  std::vector<BeamOrder> hyps{BeamOrder{}};
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    std::vector<BeamOrder> next;
    for (const auto& h : hyps) {
      ad::Tape dt(false);
      std::vector<int> dec_in{kBosToken};
      for (RoleId r : h.order) dec_in.push_back(r);
      ad::Var logits = decode(dt, dt.constant(memory_value), dec_in);
      const ad::Matrix col = logits.value().col(logits.cols() - 1);
      // Log-softmax over the tokens still allowed.
      std::vector<RoleId> allowed;
      for (RoleId r : inputs) {
        if (std::find(h.order.begin(), h.order.end(), r) == h.order.end()) {
          allowed.push_back(r);
        }
      }
      double m = -1e300;
      for (RoleId r : allowed) m = std::max(m, col(r, 0));
      double z = 0.0;
      for (RoleId r : allowed) z += std::exp(col(r, 0) - m);
      const double lse = m + std::log(z);
      for (RoleId r : allowed) {
        BeamOrder c = h;
        c.order.push_back(r);
        c.log_prob += col(r, 0) - lse;
        next.push_back(std::move(c));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const BeamOrder& a, const BeamOrder& b) {
      return a.log_prob > b.log_prob;
    });
    if (static_cast<int>(next.size()) > beam) next.resize(static_cast<std::size_t>(beam));
    hyps = std::move(next);
  }
  return hyps;
}

RLevelModel::RLevelModel(const RLevelConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  w_rv_ = nn::Linear(store_, "rlevel.w_rv", config_.d_v, config_.d_r, rng_);
  class_emb_ = nn::Embedding(store_, "rlevel.class_emb", std::max(1, config_.num_classes),
                             config_.d_c, rng_);
  mlp_b_ = nn::Mlp(store_, "rlevel.mlp_b",
                   {config_.d_r + config_.d_c + 4, config_.hidden, config_.n_max}, rng_);
}

Eigen::Vector4d position_feature(const Box& b, double image_width, double image_height) {
  return Eigen::Vector4d(b.x_min / image_width, b.y_min / image_height,
                         b.x_max / image_width, b.y_max / image_height);
}

ad::Var RLevelModel::set_codes(ad::Tape& t, const SceneSample& sample,
                               const std::vector<int>& sets) const {
  std::vector<ad::Var> codes;
  for (int s : sets) {
    const auto& members = sample.sets.at(static_cast<std::size_t>(s)).members;
    std::vector<ad::Var> cols;
    for (int m : members) {
      const Proposal& p = sample.proposals[static_cast<std::size_t>(m)];
      const int cls = std::clamp(p.class_id, 0, class_emb_.vocab() - 1);
      ad::Var in = ad::concat_rows(
          {w_rv_(t, t.constant(p.feature)), class_emb_(t, cls),
           t.constant(position_feature(p.box, sample.image_width, sample.image_height))});
      cols.push_back(in);
    }
    codes.push_back(ad::mean_cols(mlp_b_(t, ad::concat_cols(cols))));
  }
  return ad::concat_cols(codes);
}

ad::Var RLevelModel::potentials(ad::Tape& t, const SceneSample& sample,
                                const std::vector<int>& sets) const {
  const int n = static_cast<int>(sets.size());
  const int nm = config_.n_max;
  if (n > nm) {
    throw Error(ErrorCode::kTooManySets,
                std::to_string(n) + " sets exceed n_max " + std::to_string(nm));
  }
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "no sets to rank");
  ad::Var block = ad::transpose(ad::slice_rows(set_codes(t, sample, sets), 0, n));
  if (n == nm) return block;
  const double off = config_.pad_off;
  ad::Var top = ad::concat_cols({block, t.constant(ad::Matrix::Constant(n, nm - n, off))});
  ad::Matrix bottom = ad::Matrix::Constant(nm - n, nm, off);
  for (int r = 0; r < nm - n; ++r) bottom(r, n + r) = 0.0;
  return ad::concat_rows({top, t.constant(bottom)});
}

ad::Var RLevelModel::soft_permutation(ad::Tape& t, const SceneSample& sample,
                                      const std::vector<int>& sets) const {
  return sinkhorn(potentials(t, sample, sets), config_.sinkhorn_iters);
}

std::vector<int> round_block(const Eigen::MatrixXd& soft, int n) {
  std::vector<int> full = hungarian_assign(soft);
  bool inside = true;
  for (int j = 0; j < n; ++j) inside = inside && full[static_cast<std::size_t>(j)] < n;
  if (inside) return std::vector<int>(full.begin(), full.begin() + n);
  return hungarian_assign(soft.topLeftCorner(n, n));
}

std::vector<int> RLevelModel::rank_within_role(const SceneSample& sample,
                                               const std::vector<int>& sets) const {
  if (static_cast<int>(sets.size()) > config_.n_max) {
    throw Error(ErrorCode::kTooManySets,
                std::to_string(sets.size()) + " sets exceed n_max " +
                    std::to_string(config_.n_max));
  }
  if (sets.size() <= 1) return sets;
  ad::Tape t(false);
  const auto pos = round_block(soft_permutation(t, sample, sets).value(),
                               static_cast<int>(sets.size()));
  std::vector<int> ordered(sets.size());
  for (std::size_t j = 0; j < sets.size(); ++j) {
    ordered[static_cast<std::size_t>(pos[j])] = sets[j];
  }
  return ordered;
}

PlanResult plan_with_order(const RLevelModel& r_level, const Vsr& vsr,
                           const GroundingResult& grounding, const SceneSample& sample,
                           const std::vector<RoleId>& role_order) {
  PlanResult out;
  out.role_order = role_order;
  for (RoleId r : role_order) {
    if (r == kVerbRole) {
      out.structure.subroles.push_back(SubRole::verb());
      out.sets.push_back(-1);
      continue;
    }
    auto it = grounding.chosen.find(r);
    if (it == grounding.chosen.end() ||
        static_cast<int>(it->second.size()) != vsr.count_of(r)) {
      throw Error(ErrorCode::kInvalidInput,
                  "grounding does not cover role " + std::string(role_name(r)));
    }
    const auto ordered = r_level.rank_within_role(sample, it->second);
    for (std::size_t k = 0; k < ordered.size(); ++k) {
      out.structure.subroles.push_back(SubRole{r, static_cast<int>(k) + 1});
      out.sets.push_back(ordered[k]);
    }
  }
  return out;
}

PlanResult plan(const SLevelModel& s_level, const RLevelModel& r_level, const Vsr& vsr,
                const GroundingResult& grounding, const SceneSample& sample) {
  return plan_with_order(r_level, vsr, grounding, sample, s_level.plan_role_order(vsr));
}

std::vector<Eigen::MatrixXd> plan_regions(const PlanResult& plan, const SceneSample& sample) {
  std::vector<Eigen::MatrixXd> out;
  for (int s : plan.sets) {
    out.push_back(s < 0 ? Eigen::MatrixXd(sample.global_feature) : sample.set_features(s));
  }
  return out;
}

std::vector<Eigen::VectorXd> plan_pooled(const PlanResult& plan, const SceneSample& sample) {
  std::vector<Eigen::VectorXd> out;
  for (int s : plan.sets) {
    out.push_back(s < 0 ? sample.global_feature
                        : sample.sets[static_cast<std::size_t>(s)].pooled);
  }
  return out;
}

double s_level_loss(const Eigen::MatrixXd& probs, const std::vector<int>& targets) {
  if (probs.cols() != static_cast<Eigen::Index>(targets.size())) {
    throw Error(ErrorCode::kShapeMismatch, "one target per prediction column");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] < 0 || targets[t] >= probs.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "target outside vocabulary");
    }
    loss -= std::log(probs(targets[t], static_cast<Eigen::Index>(t)));
  }
  return loss;
}

double r_level_loss(const std::vector<Eigen::MatrixXd>& predicted,
                    const std::vector<Eigen::MatrixXd>& target,
                    const std::vector<int>& counts) {
  if (predicted.size() != target.size() || predicted.size() != counts.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one matrix pair per role");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    if (counts[t] <= 1) continue;
    if (predicted[t].rows() != target[t].rows() || predicted[t].cols() != target[t].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "permutation shapes differ");
    }
    loss += (predicted[t] - target[t]).squaredNorm() / static_cast<double>(predicted[t].size());
  }
  return loss;
}

SspLosses ssp_losses(const Eigen::MatrixXd& s_probs, const std::vector<int>& s_targets,
                     const std::vector<Eigen::MatrixXd>& p_pred,
                     const std::vector<Eigen::MatrixXd>& p_gt,
                     const std::vector<int>& counts) {
  return SspLosses{s_level_loss(s_probs, s_targets), r_level_loss(p_pred, p_gt, counts)};
}

std::vector<int> r_level_input_sets(const SceneSample& sample, RoleId role) {
  auto sets = sample.gt_sets_of(role);
  std::sort(sets.begin(), sets.end());
  return sets;
}

Eigen::MatrixXd r_level_target(const SceneSample& sample, RoleId role, int n_max) {
  const auto mention = sample.gt_sets_of(role);
  const auto input = r_level_input_sets(sample, role);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n_max, n_max);
  const auto n = static_cast<Eigen::Index>(input.size());
  p.topLeftCorner(n, n).setZero();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto k = std::find(mention.begin(), mention.end(), input[static_cast<std::size_t>(j)]) -
                   mention.begin();
    p(j, k) = 1.0;
  }
  return p;
}

namespace {

std::vector<RoleId> inputs_of(const Vsr& vsr) {
  std::vector<RoleId> in;
  for (const auto& rc : vsr.roles) in.push_back(rc.role);
  in.push_back(kVerbRole);
  return in;
}

template <typename StepFn, typename EvalFn>
std::vector<EpochLog> run_epochs(nn::ParameterStore& store, std::size_t n,
                                 const SspTrainOptions& options, StepFn step, EvalFn eval) {
  nn::Adam adam(store, {options.lr, 0.9, 0.999, 1e-8, 5.0});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> logs;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_lr(nn::step_decay(options.lr, options.lr_decay, options.lr_every, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t terms = 0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(n, b + static_cast<std::size_t>(options.batch));
      std::size_t used = 0;
      for (std::size_t k = b; k < end; ++k) {
        double loss = 0.0;
        if (step(order[k], loss)) {
          total += loss;
          ++used;
        }
      }
      terms += used;
      if (used > 0) adam.step(1.0 / static_cast<double>(used));
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = terms == 0 ? 0.0 : total / static_cast<double>(terms);
    log.val_metric = eval();
    log.lr = adam.lr();
    logs.push_back(log);
  }
  return logs;
}

}  // namespace

double s_level_accuracy(const SLevelModel& model, const std::vector<SceneSample>& samples) {
  if (samples.empty()) return 0.0;
  int hits = 0;
  for (const auto& s : samples) {
    hits += model.plan_role_order(s.gt_vsr) == s.gt_structure.role_order() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double r_level_accuracy(const RLevelModel& model, const std::vector<SceneSample>& samples) {
  int hits = 0, total = 0;
  for (const auto& s : samples) {
    for (const auto& rc : s.gt_vsr.roles) {
      if (rc.count < 2) continue;
      ++total;
      hits += model.rank_within_role(s, r_level_input_sets(s, rc.role)) ==
                      s.gt_sets_of(rc.role)
                  ? 1
                  : 0;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<EpochLog> train_s_level(SLevelModel& model, const std::vector<SceneSample>& train,
                                    const std::vector<SceneSample>& val,
                                    const SspTrainOptions& options) {
  auto step = [&](std::size_t i, double& loss) {
    const SceneSample& s = train[i];
    const auto target = s.gt_structure.role_order();
    ad::Tape t;
    ad::Var lp = model.teacher_log_probs(t, model.verb_id(s.gt_vsr.verb), inputs_of(s.gt_vsr),
                                         target);
    std::vector<ad::Var> picks;
    for (std::size_t k = 0; k < target.size(); ++k) {
      picks.push_back(ad::pick(lp, target[k], static_cast<Eigen::Index>(k)));
    }
    ad::Var l = ad::neg(ad::sum(ad::concat_cols(picks)));
    loss = l.scalar();
    t.backward(l);
    return true;
  };
  auto eval = [&] { return val.empty() ? 0.0 : s_level_accuracy(model, val); };
  return run_epochs(model.store(), train.size(), options, step, eval);
}

std::vector<EpochLog> train_r_level(RLevelModel& model, const std::vector<SceneSample>& train,
                                    const std::vector<SceneSample>& val,
                                    const SspTrainOptions& options) {
  const int nm = model.config().n_max;
  auto step = [&](std::size_t i, double& loss) {
    const SceneSample& s = train[i];
    ad::Tape t;
    std::vector<ad::Var> terms;
    for (const auto& rc : s.gt_vsr.roles) {
      if (rc.count < 2) continue;
      ad::Var p = model.soft_permutation(t, s, r_level_input_sets(s, rc.role));
      ad::Var d = p - t.constant(r_level_target(s, rc.role, nm));
      terms.push_back(ad::sum(ad::mul(d, d)) * (1.0 / static_cast<double>(nm * nm)));
    }
    if (terms.empty()) return false;
    ad::Var l = ad::sum(ad::concat_cols(terms));
    loss = l.scalar();
    t.backward(l);
    return true;
  };
  auto eval = [&] { return val.empty() ? 0.0 : r_level_accuracy(model, val); };
  return run_epochs(model.store(), train.size(), options, step, eval);
}

}  // namespace vsrcap
