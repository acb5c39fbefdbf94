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

#include "vsrcap/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

ad::Parameter* make(nn::ParameterStore& store, const std::string& name, int rows, int cols,
                    std::mt19937_64& rng) {
  return &store.create(name, nn::glorot(rows, cols, rng));
}

std::vector<ad::Matrix> snapshot(const nn::ParameterStore& store) {
  std::vector<ad::Matrix> out;
  for (const auto* p : store.all()) out.push_back(p->value);
  return out;
}

void restore(nn::ParameterStore& store, const std::vector<ad::Matrix>& values) {
  auto params = store.all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

Tokens to_strings(const std::vector<int>& ids, const Vocabulary& vocab) {
  Tokens out;
  for (int id : ids) out.push_back(vocab.token(id));
  return out;
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

Captioner::Captioner(const CaptionerConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  if (config_.vocab <= Vocabulary::kUnk) {
    throw Error(ErrorCode::kInvalidInput, "captioner vocabulary is too small");
  }
  const int h = config_.hidden, dv = config_.d_v, da = config_.d_att;
  const int dx = config_.d_w + dv + h;
  word_emb_ = nn::Embedding(store_, "cap.word_emb", config_.vocab, config_.d_w, rng_);
  lstm1_ = nn::LstmCell(store_, "cap.lstm1", dx, h, rng_);
  lstm2_ = nn::LstmCell(store_, "cap.lstm2", 2 * h, h, rng_);
  w_ig_ = make(store_, "cap.w_ig", h, dx, rng_);
  w_hg_ = make(store_, "cap.w_hg", h, h, rng_);
  w_sg_ = make(store_, "cap.w_sg", da, h, rng_);
  w_sr_ = make(store_, "cap.w_sr", da, dv, rng_);
  w_g_ = make(store_, "cap.w_g", da, h, rng_);
  w_h_ = make(store_, "cap.w_h", da, 1, rng_);
  w_is_ = make(store_, "cap.w_is", h, dx, rng_);
  w_hs_ = make(store_, "cap.w_hs", h, h, rng_);
  w_ss_ = make(store_, "cap.w_ss", da, h, rng_);
  if (config_.share_attention) {
    w_sr_ctx_ = w_sr_;
    w_g_ctx_ = w_g_;
    w_h_ctx_ = w_h_;
  } else {
    w_sr_ctx_ = make(store_, "cap.w_sr_ctx", da, dv, rng_);
    w_g_ctx_ = make(store_, "cap.w_g_ctx", da, h, rng_);
    w_h_ctx_ = make(store_, "cap.w_h_ctx", da, 1, rng_);
  }
  w_rv_ = make(store_, "cap.w_rv", h, dv, rng_);
  fc_b_ = nn::Linear(store_, "cap.fc_b", h, config_.vocab, rng_);
}

const ad::Parameter& Captioner::param(const std::string& name) const {
  const ad::Parameter* p = store_.find(name);
  if (!p) throw Error(ErrorCode::kInvalidInput, "no parameter " + name);
  return *p;
}

void Captioner::validate(const CaptionInput& input) const {
  if (input.structure.subroles.empty()) {
    throw Error(ErrorCode::kEmptyStructure, "caption input has no sub-roles");
  }
  if (input.regions.size() != input.structure.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one region matrix per sub-role");
  }
  if (input.global.size() != config_.d_v) {
    throw Error(ErrorCode::kDimensionMismatch, "global feature dimension");
  }
  for (const auto& r : input.regions) {
    if (r.rows() != config_.d_v || r.cols() < 1) {
      throw Error(ErrorCode::kDimensionMismatch, "region feature dimension");
    }
  }
}

DecoderState Captioner::initial_state() const {
  const int h = config_.hidden;
  return DecoderState{Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h),
                      Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h), 0};
}

Captioner::StepVars Captioner::run_step(ad::Tape& t, const nn::LstmState& s1,
                                        const nn::LstmState& s2, int prev_token,
                                        const ad::Var& global, int pointer,
                                        const CaptionInput& input, RegionCache& cache) const {
  const auto k = static_cast<std::size_t>(pointer);
  if (cache.sr.empty()) {
    cache.sr.resize(input.regions.size());
    cache.ctx_sr.resize(input.regions.size());
    cache.value.resize(input.regions.size());
  }
  if (!cache.sr[k].valid()) {
    ad::Var r = t.constant(input.regions[k]);
    cache.sr[k] = ad::matmul(t.param(*w_sr_), r);
    cache.ctx_sr[k] = config_.share_attention ? cache.sr[k] : ad::matmul(t.param(*w_sr_ctx_), r);
    cache.value[k] = ad::matmul(t.param(*w_rv_), r);
  }
  const auto n = input.regions[k].cols();

  ad::Var x = ad::concat_rows({word_emb_(t, prev_token), global, s2.h});
  nn::LstmState n1 = lstm1_(t, x, s1);
  ad::Var tanh_m = ad::tanh(n1.c);

  // Shift gate head.
  ad::Var wg = ad::matmul(t.param(*w_g_), n1.h);
  ad::Var sg = ad::mul(
      ad::sigmoid(ad::matmul(t.param(*w_ig_), x) + ad::matmul(t.param(*w_hg_), s1.h)), tanh_m);
  ad::Var a_r = ad::matmul_tn(t.param(*w_h_), ad::tanh(cache.sr[k] + wg));
  ad::Var a_g = ad::matmul_tn(t.param(*w_h_), ad::tanh(ad::matmul(t.param(*w_sg_), sg) + wg));
  ad::Var gate_lp = ad::log_softmax_cols(ad::concat_rows({a_g, ad::transpose(a_r)}));

  // Context head.
  ad::Var wgc = config_.share_attention ? wg : ad::matmul(t.param(*w_g_ctx_), n1.h);
  ad::Var a_rc = config_.share_attention
                     ? a_r
                     : ad::matmul_tn(t.param(*w_h_ctx_), ad::tanh(cache.ctx_sr[k] + wgc));
  ad::Var sv = ad::mul(
      ad::sigmoid(ad::matmul(t.param(*w_is_), x) + ad::matmul(t.param(*w_hs_), s1.h)), tanh_m);
  ad::Var a_v =
      ad::matmul_tn(t.param(*w_h_ctx_), ad::tanh(ad::matmul(t.param(*w_ss_), sv) + wgc));
  ad::Var cw = ad::softmax_cols(ad::concat_rows({ad::transpose(a_rc), a_v}));
  ad::Var ctx = ad::matmul(cache.value[k], ad::slice_rows(cw, 0, n)) +
                ad::mul(sv, ad::slice_rows(cw, n, 1));

  nn::LstmState n2 = lstm2_(t, ad::concat_rows({n1.h, ctx}), s2);
  ad::Var wlp = ad::log_softmax_cols(fc_b_(t, n2.h));
  return StepVars{n1, n2, wlp, gate_lp, cw};
}

StepOutput Captioner::step(const DecoderState& state, int prev_token,
                           const CaptionInput& input) const {
  validate(input);
  ad::Tape t(false);
  RegionCache cache;
  nn::LstmState s1{t.constant(state.h1), t.constant(state.c1)};
  nn::LstmState s2{t.constant(state.h2), t.constant(state.c2)};
  StepVars v = run_step(t, s1, s2, prev_token, t.constant(input.global), state.pointer, input,
                        cache);
  StepOutput out;
  out.word_probs = v.word_log_probs.value().col(0).array().exp().matrix();
  out.gate_weights = v.gate_log_probs.value().col(0).array().exp().matrix();
  out.gate_prob = out.gate_weights(0);
  out.context_weights = v.context_weights.value().col(0);
  out.next = DecoderState{v.s1.h.value().col(0), v.s1.c.value().col(0), v.s2.h.value().col(0),
                          v.s2.c.value().col(0), state.pointer};
  return out;
}

namespace {

struct Hyp {
  DecoderState state;
  int prev = Vocabulary::kBos;
  int verb_done = -1;  // pointer of the last verb slot whose word was emitted
  CaptionTrace trace;
};

void record_weights(CaptionTrace& tr, const StepOutput& o) {
  tr.gate_weight_sum.push_back(o.gate_weights.sum());
  tr.gate_weight_min.push_back(o.gate_weights.minCoeff());
  tr.context_weight_sum.push_back(o.context_weights.sum());
  tr.context_weight_min.push_back(o.context_weights.minCoeff());
}

// Oracle verb word for the focused slot, or -1.
int oracle_word(const CaptionInput& in, const Hyp& h, bool oracle) {
  const int p = h.state.pointer;
  if (!oracle || p == h.verb_done || !gate_forced(in.structure, p)) return -1;
  const auto k = static_cast<std::size_t>(p);
  return k < in.verb_tokens.size() ? in.verb_tokens[k] : -1;
}

// In oracle-verb mode EOS waits until every verb slot has been voiced.
bool eos_blocked(const CaptionInput& in, const Hyp& h, bool oracle) {
  if (!oracle) return false;
  for (std::size_t k = static_cast<std::size_t>(h.state.pointer); k < in.structure.size(); ++k) {
    if (in.structure.subroles[k].is_verb() && static_cast<int>(k) != h.verb_done) return true;
  }
  return false;
}

// Word probabilities restricted to emittable tokens.
Eigen::VectorXd choice_probs(const StepOutput& o, bool block_eos) {
  Eigen::VectorXd p = o.word_probs;
  p(Vocabulary::kPad) = 0.0;
  p(Vocabulary::kBos) = 0.0;
  if (block_eos) p(Vocabulary::kEos) = 0.0;
  return p;
}

// Appends word `w` chosen at this step; returns false when it was EOS.
bool extend(Hyp& h, const StepOutput& o, int w, int gate, bool forced, int k) {
  CaptionTrace& tr = h.trace;
  tr.subrole.push_back(h.state.pointer + 1);
  record_weights(tr, o);
  const double lp = std::log(std::max(o.word_probs(w), 1e-300));
  tr.word_log_prob.push_back(lp);
  tr.score += lp;
  const int pointer = h.state.pointer;
  h.state = o.next;
  if (w == Vocabulary::kEos) {
    tr.ended = true;
    return false;
  }
  if (forced) h.verb_done = pointer;
  tr.tokens.push_back(w);
  tr.gates.push_back(gate);
  tr.forced.push_back(forced ? 1 : 0);
  tr.gate_prob.push_back(o.gate_prob);
  tr.gate_log_prob.push_back(
      forced ? 0.0 : std::log(std::max(gate ? o.gate_prob : 1.0 - o.gate_prob, 1e-300)));
  h.state.pointer = std::min(pointer + gate, k - 1);
  h.prev = w;
  return true;
}

}  // namespace

CaptionTrace Captioner::decode_greedy_or_sample(const CaptionInput& input,
                                                const DecodeOptions& options) const {
  const int k = static_cast<int>(input.structure.size());
  const bool sample = options.mode == DecodeMode::kSample;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Hyp h;
  h.state = initial_state();
  while (static_cast<int>(h.trace.tokens.size()) < options.max_len) {
    const StepOutput o = step(h.state, h.prev, input);
    const bool forced = gate_forced(input.structure, h.state.pointer);
    int w = oracle_word(input, h, options.oracle_verb);
    if (w < 0) {
      const Eigen::VectorXd p = choice_probs(o, eos_blocked(input, h, options.oracle_verb));
      if (sample) {
        std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
        w = dist(rng);
      } else {
        w = argmax(p);
      }
    }
    int gate = 1;
    if (!forced) gate = sample ? (unit(rng) < o.gate_prob ? 1 : 0) : (o.gate_prob >= 0.5 ? 1 : 0);
    if (!extend(h, o, w, gate, forced, k)) break;
  }
  return h.trace;
}

CaptionTrace Captioner::decode_beam(const CaptionInput& input,
                                    const DecodeOptions& options) const {
  const int k = static_cast<int>(input.structure.size());
  const int b = std::max(1, options.beam);
  std::vector<Hyp> alive(1);
  alive[0].state = initial_state();
  std::vector<Hyp> finished;
  while (!alive.empty() && static_cast<int>(finished.size()) < b) {
    struct Cand {
      double score;
      std::size_t hyp;
      int word;
    };
    std::vector<Cand> cands;
    std::vector<StepOutput> outs;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const Hyp& h = alive[i];
      outs.push_back(step(h.state, h.prev, input));
      const StepOutput& o = outs.back();
      const int forced_word = oracle_word(input, h, options.oracle_verb);
      if (forced_word >= 0) {
        cands.push_back(
            {h.trace.score + std::log(std::max(o.word_probs(forced_word), 1e-300)), i,
             forced_word});
        continue;
      }
      const Eigen::VectorXd p = choice_probs(o, eos_blocked(input, h, options.oracle_verb));
      std::vector<int> idx(static_cast<std::size_t>(p.size()));
      std::iota(idx.begin(), idx.end(), 0);
      const auto top = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(b));
      std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(top), idx.end(),
                        [&](int a, int c) { return p(a) > p(c) || (p(a) == p(c) && a < c); });
      for (std::size_t j = 0; j < top; ++j) {
        const int w = idx[j];
        if (p(w) <= 0.0) break;
        cands.push_back({h.trace.score + std::log(std::max(o.word_probs(w), 1e-300)), i, w});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& c) { return a.score > c.score; });
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      if (static_cast<int>(next.size() + finished.size()) >= b) break;
      Hyp h = alive[c.hyp];
      const StepOutput& o = outs[c.hyp];
      const bool forced = gate_forced(input.structure, h.state.pointer);
      const int gate = forced ? 1 : (o.gate_prob >= 0.5 ? 1 : 0);
      if (!extend(h, o, c.word, gate, forced, k) ||
          static_cast<int>(h.trace.tokens.size()) >= options.max_len) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  if (finished.empty()) finished = std::move(alive);
  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (finished[i].trace.score > finished[best].trace.score) best = i;
  }
  return finished[best].trace;
}

CaptionTrace Captioner::decode(const CaptionInput& input, const DecodeOptions& options) const {
  validate(input);
  if (options.max_len < 1) throw Error(ErrorCode::kInvalidInput, "max_len must be >= 1");
  if (options.mode == DecodeMode::kBeam) return decode_beam(input, options);
  return decode_greedy_or_sample(input, options);
}

Captioner::SequenceLogProb Captioner::sequence_log_prob(ad::Tape& t, const CaptionInput& input,
                                                        const std::vector<int>& tokens,
                                                        const std::vector<int>& gates,
                                                        bool with_eos) const {
  validate(input);
  std::size_t n = 0;
  while (n < tokens.size() && tokens[n] != Vocabulary::kPad) ++n;
  if (gates.size() < n) throw Error(ErrorCode::kShapeMismatch, "one gate per token");
  const int k = static_cast<int>(input.structure.size());
  ad::Var global = t.constant(input.global);
  nn::LstmState s1 = lstm1_.zero_state(t), s2 = lstm2_.zero_state(t);
  RegionCache cache;
  int prev = Vocabulary::kBos, pointer = 0;
  std::vector<ad::Var> words, gate_terms;
  SequenceLogProb out;
  for (std::size_t i = 0; i < n; ++i) {
    StepVars v = run_step(t, s1, s2, prev, global, pointer, input, cache);
    words.push_back(ad::pick(v.word_log_probs, tokens[i], 0));
    const bool forced = gate_forced(input.structure, pointer);
    int g = gates[i] ? 1 : 0;
    if (forced) {
      g = 1;
      ++out.forced_gates;
    } else if (g == 1) {
      gate_terms.push_back(ad::pick(v.gate_log_probs, 0, 0));
    } else {
      const auto nr = v.gate_log_probs.rows() - 1;
      gate_terms.push_back(ad::logsumexp_cols(ad::slice_rows(v.gate_log_probs, 1, nr)));
    }
    pointer = std::min(pointer + g, k - 1);
    prev = tokens[i];
    s1 = v.s1;
    s2 = v.s2;
  }
  if (with_eos) {
    StepVars v = run_step(t, s1, s2, prev, global, pointer, input, cache);
    words.push_back(ad::pick(v.word_log_probs, Vocabulary::kEos, 0));
  }
  out.words = words.empty() ? t.constant(ad::Matrix::Zero(1, 1)) : ad::sum(ad::concat_cols(words));
  out.gates = gate_terms.empty() ? t.constant(ad::Matrix::Zero(1, 1))
                                 : ad::sum(ad::concat_cols(gate_terms));
  return out;
}

CaptionInput make_caption_input(const SceneSample& sample, const SemanticStructure& structure,
                                const std::vector<int>& sets, const Vocabulary& vocab,
                                const SceneGrammar& grammar,
                                const std::vector<std::string>& verbs_per_slot) {
  if (sets.size() != structure.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one set per sub-role");
  }
  CaptionInput in;
  in.structure = structure;
  in.global = sample.global_feature;
  std::size_t verb_slot = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (structure.subroles[k].is_verb() || sets[k] < 0) {
      in.regions.push_back(Eigen::MatrixXd(sample.global_feature));
      int tok = -1;
      if (verb_slot < verbs_per_slot.size()) {
        const int vi = grammar.verb_index(verbs_per_slot[verb_slot]);
        if (vi >= 0) tok = vocab.id(grammar.verbs[static_cast<std::size_t>(vi)].surface);
      }
      ++verb_slot;
      in.verb_tokens.push_back(tok);
    } else {
      in.regions.push_back(sample.set_features(sets[k]));
      in.verb_tokens.push_back(-1);
    }
  }
  return in;
}

CaptionExample make_caption_example(const SceneSample& sample, const Vocabulary& vocab,
                                    const SceneGrammar& grammar) {
  const SceneSample filled = fill_missing_regions(sample);
  std::vector<int> sets;
  for (const auto& sub : filled.gt_structure.subroles) {
    sets.push_back(sub.is_verb() ? -1 : filled.gt_grounding.at(sub));
  }
  CaptionExample ex;
  ex.input = make_caption_input(filled, filled.gt_structure, sets, vocab, grammar,
                                {filled.gt_vsr.verb});
  ex.tokens = vocab.encode(filled.gt_caption);
  ex.gates = filled.gt_gates;
  ex.reference = filled.gt_caption;
  ex.vsr = filled.gt_vsr;
  return ex;
}

double xe_loss(const Captioner& model, const std::vector<CaptionExample>& batch,
               double gate_weight) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : batch) {
    ad::Tape t(false);
    auto lp = model.sequence_log_prob(t, ex.input, ex.tokens, ex.gates, true);
    total -= lp.words.scalar() + gate_weight * lp.gates.scalar();
  }
  return total / static_cast<double>(batch.size());
}

ScstResult scst_update(const Captioner& model, const CaptionInput& input,
                       const std::vector<Tokens>& references, const CorpusStats& stats,
                       const Vocabulary& vocab, std::uint64_t sample_seed, int max_len,
                       double scale) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferences, "scst_update");
  ScstResult out;
  DecodeOptions sample_opts{DecodeMode::kSample, 1, max_len, false, sample_seed};
  out.sample = model.decode(input, sample_opts);
  DecodeOptions greedy_opts{DecodeMode::kGreedy, 1, max_len, false, 0};
  const CaptionTrace greedy = model.decode(input, greedy_opts);
  out.reward = cider_d(to_strings(out.sample.tokens, vocab), references, stats);
  out.baseline = cider_d(to_strings(greedy.tokens, vocab), references, stats);
  ad::Tape t;
  auto lp = model.sequence_log_prob(t, input, out.sample.tokens, out.sample.gates,
                                    out.sample.ended);
  ad::Var total = lp.words + lp.gates;
  out.log_prob = total.scalar();
  const double advantage = out.reward - out.baseline;
  if (advantage != 0.0) t.backward(total, -advantage * scale);
  return out;
}

std::vector<Tokens> decode_tokens(const Captioner& model,
                                  const std::vector<CaptionExample>& examples,
                                  const Vocabulary& vocab, const DecodeOptions& options) {
  std::vector<Tokens> out;
  for (const auto& ex : examples) {
    out.push_back(to_strings(model.decode(ex.input, options).tokens, vocab));
  }
  return out;
}

double validation_cider(const Captioner& model, const std::vector<CaptionExample>& val,
                        const Vocabulary& vocab, int max_len) {
  if (val.empty()) return 0.0;
  std::vector<std::vector<Tokens>> refs;
  for (const auto& ex : val) refs.push_back({ex.reference});
  const CorpusStats stats(refs);
  DecodeOptions opts{DecodeMode::kGreedy, 1, max_len, false, 0};
  const auto caps = decode_tokens(model, val, vocab, opts);
  double total = 0.0;
  for (std::size_t i = 0; i < caps.size(); ++i) total += cider_d(caps[i], refs[i], stats);
  return total / static_cast<double>(caps.size());
}

double mean_sample_reward(const Captioner& model, const std::vector<CaptionExample>& examples,
                          const Vocabulary& vocab, const CorpusStats& stats, int max_len,
                          std::uint64_t seed, int samples) {
  if (examples.empty() || samples < 1) return 0.0;
  double total = 0.0;
  const auto per = static_cast<std::uint64_t>(samples);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (std::uint64_t s = 0; s < per; ++s) {
      DecodeOptions opts{DecodeMode::kSample, 1, max_len, false, seed + i * per + s};
      const auto trace = model.decode(examples[i].input, opts);
      total += cider_d(to_strings(trace.tokens, vocab), {examples[i].reference}, stats);
    }
  }
  return total / static_cast<double>(examples.size() * per);
}

std::vector<CaptionerEpochLog> train_captioner_xe(Captioner& model,
                                                  const std::vector<CaptionExample>& train,
                                                  const std::vector<CaptionExample>& val,
                                                  const Vocabulary& vocab,
                                                  const CaptionerTrainOptions& options) {
  nn::Adam adam(model.store(), {options.lr, 0.9, 0.999, 1e-8, 5.0});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<CaptionerEpochLog> logs;
  double best = -1.0;
  int stale = 0;
  auto best_values = snapshot(model.store());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_lr(nn::step_decay(options.lr, options.lr_decay, 1, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(options.batch));
      for (std::size_t i = b; i < end; ++i) {
        const CaptionExample& ex = train[order[i]];
        ad::Tape t;
        auto lp = model.sequence_log_prob(t, ex.input, ex.tokens, ex.gates, true);
        ad::Var loss = ad::neg(lp.words + lp.gates * options.gate_weight);
        total += loss.scalar();
        t.backward(loss);
      }
      adam.step(1.0 / static_cast<double>(end - b));
    }
    CaptionerEpochLog log;
    log.epoch = epoch;
    log.train_loss = total / static_cast<double>(std::max<std::size_t>(1, train.size()));
    log.val_cider = validation_cider(model, val, vocab, options.max_len);
    log.lr = adam.lr();
    logs.push_back(log);
    if (log.val_cider > best) {
      best = log.val_cider;
      best_values = snapshot(model.store());
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }
  if (options.restore_best) restore(model.store(), best_values);
  return logs;
}

std::vector<CaptionerEpochLog> train_captioner_rl(Captioner& model,
                                                  const std::vector<CaptionExample>& train,
                                                  const std::vector<CaptionExample>& val,
                                                  const Vocabulary& vocab,
                                                  const CaptionerTrainOptions& options) {
  std::vector<std::vector<Tokens>> refs;
  for (const auto& ex : train) refs.push_back({ex.reference});
  const CorpusStats stats(refs);
  nn::Adam adam(model.store(), {options.lr, 0.9, 0.999, 1e-8, 5.0});
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<CaptionerEpochLog> logs;
  double best = validation_cider(model, val, vocab, options.max_len);
  auto best_values = snapshot(model.store());
  int stale = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_lr(nn::step_decay(options.lr, options.lr_decay, 1, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double reward = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(options.batch));
      const double scale = 1.0 / static_cast<double>(end - b);
      for (std::size_t i = b; i < end; ++i) {
        const CaptionExample& ex = train[order[i]];
        const auto r = scst_update(model, ex.input, refs[order[i]], stats, vocab, rng(),
                                   options.max_len, scale);
        reward += r.reward;
      }
      adam.step();
    }
    CaptionerEpochLog log;
    log.epoch = epoch;
    log.train_reward = reward / static_cast<double>(std::max<std::size_t>(1, train.size()));
    log.train_loss = log.train_reward;
    log.val_cider = validation_cider(model, val, vocab, options.max_len);
    log.lr = adam.lr();
    logs.push_back(log);
    if (log.val_cider > best) {
      best = log.val_cider;
      best_values = snapshot(model.store());
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }
  if (options.restore_best) restore(model.store(), best_values);
  return logs;
}

}  // namespace vsrcap
