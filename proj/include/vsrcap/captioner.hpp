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

// Role-shift captioner: a two-layer LSTM decoder whose attention is confined
// to the regions of the focused sub-role. A shift gate head decides when the
// focus moves to the next sub-role; a context head with a visual sentinel
// builds the context vector for the second LSTM.

#ifndef VSRCAP_CAPTIONER_HPP_
#define VSRCAP_CAPTIONER_HPP_

#include <random>
#include <string>
#include <vector>

#include "vsrcap/gsrl.hpp"
#include "vsrcap/metrics.hpp"
#include "vsrcap/nn.hpp"
#include "vsrcap/scene.hpp"

namespace vsrcap {

struct CaptionerConfig {
  int vocab = 0;
  int d_v = 64;
  int d_w = 64;
  int hidden = 64;
  int d_att = 64;
  bool share_attention = true;  // heads share W_sr, W_g and w_h
};

// One decoding problem: the planned structure, region features per
// sub-role (d_v x n; the verb slot holds the global feature) and the
// global feature. verb_tokens[k] is the caption token for a verb slot,
// used by oracle-verb decoding (-1 elsewhere).
struct CaptionInput {
  SemanticStructure structure;
  std::vector<Eigen::MatrixXd> regions;
  Eigen::VectorXd global;
  std::vector<int> verb_tokens;
};

enum class DecodeMode { kGreedy, kBeam, kSample };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  int beam = 5;
  int max_len = 20;
  bool oracle_verb = false;
  std::uint64_t seed = 0;
};

// Per decoding step t (including a final EOS step when one was emitted):
// subrole[t] is the 1-based focused sub-role, gates[t] the shift decision
// taken after emitting token t (only for non-EOS steps).
struct CaptionTrace {
  std::vector<int> tokens;
  bool ended = false;
  std::vector<int> subrole;
  std::vector<int> gates;
  std::vector<char> forced;
  std::vector<double> gate_prob;
  std::vector<double> word_log_prob;
  std::vector<double> gate_log_prob;
  // Sums and minima of the two attention distributions at every step.
  std::vector<double> gate_weight_sum, gate_weight_min;
  std::vector<double> context_weight_sum, context_weight_min;
  double score = 0;
};

struct DecoderState {
  Eigen::VectorXd h1, c1, h2, c2;
  int pointer = 0;  // 0-based focused sub-role
};

// Values produced by one step, for inspection and reference checks.
struct StepOutput {
  Eigen::VectorXd word_probs;
  double gate_prob = 0;           // alpha^g
  Eigen::VectorXd gate_weights;   // [alpha^g; renormalized region weights]
  Eigen::VectorXd context_weights;  // [alpha^r; alpha^v]
  DecoderState next;              // pointer unchanged
};

class Captioner {
 public:
  Captioner(const CaptionerConfig& config, std::uint64_t seed);
  const CaptionerConfig& config() const { return config_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }

  DecoderState initial_state() const;
  StepOutput step(const DecoderState& state, int prev_token, const CaptionInput& input) const;

  CaptionTrace decode(const CaptionInput& input, const DecodeOptions& options) const;

  // Teacher-forced log-likelihood terms of a token/gate sequence. Tokens
  // stop at the first kPad; `with_eos` appends an EOS target. Forced gates
  // are excluded from the gate term.
  struct SequenceLogProb {
    ad::Var words;
    ad::Var gates;
    int forced_gates = 0;
  };
  SequenceLogProb sequence_log_prob(ad::Tape& t, const CaptionInput& input,
                                    const std::vector<int>& tokens,
                                    const std::vector<int>& gates, bool with_eos) const;

  // Parameter names used by the step equations.
  const ad::Parameter& param(const std::string& name) const;

 private:
  struct StepVars {
    nn::LstmState s1, s2;
    ad::Var word_log_probs;  // V x 1
    ad::Var gate_log_probs;  // (n+1) x 1, row 0 is log alpha^g
    ad::Var context_weights;
  };
  struct RegionCache {
    std::vector<ad::Var> sr, ctx_sr, value;
  };
  StepVars run_step(ad::Tape& t, const nn::LstmState& s1, const nn::LstmState& s2,
                    int prev_token, const ad::Var& global, int pointer,
                    const CaptionInput& input, RegionCache& cache) const;
  void validate(const CaptionInput& input) const;

  CaptionTrace decode_greedy_or_sample(const CaptionInput& input,
                                       const DecodeOptions& options) const;
  CaptionTrace decode_beam(const CaptionInput& input, const DecodeOptions& options) const;

  CaptionerConfig config_;
  nn::ParameterStore store_;
  std::mt19937_64 rng_;
  nn::Embedding word_emb_;
  nn::LstmCell lstm1_, lstm2_;
  ad::Parameter *w_ig_, *w_hg_, *w_sg_, *w_sr_, *w_g_, *w_h_;
  ad::Parameter *w_is_, *w_hs_, *w_ss_;
  ad::Parameter *w_sr_ctx_, *w_g_ctx_, *w_h_ctx_;
  ad::Parameter* w_rv_;
  nn::Linear fc_b_;
};

// Whether a focused sub-role forces the shift gate (the verb is one token).
inline bool gate_forced(const SemanticStructure& s, int pointer) {
  return s.subroles.at(static_cast<std::size_t>(pointer)).is_verb();
}

// Training example built from ground-truth structure and grounding.
struct CaptionExample {
  CaptionInput input;
  std::vector<int> tokens;
  std::vector<int> gates;
  Tokens reference;
  Vsr vsr;
};

CaptionExample make_caption_example(const SceneSample& sample, const Vocabulary& vocab,
                                    const SceneGrammar& grammar);
// Decoding input for an arbitrary structure/set assignment (set -1 = verb).
CaptionInput make_caption_input(const SceneSample& sample, const SemanticStructure& structure,
                                const std::vector<int>& sets, const Vocabulary& vocab,
                                const SceneGrammar& grammar,
                                const std::vector<std::string>& verbs_per_slot);

// Mean over the batch of -(word log-lik + gate_weight * gate log-lik).
double xe_loss(const Captioner& model, const std::vector<CaptionExample>& batch,
               double gate_weight);

struct ScstResult {
  double reward = 0;
  double baseline = 0;
  double log_prob = 0;
  CaptionTrace sample;
};

// Samples a trace, decodes the greedy baseline, and accumulates
// -(r - b) * grad(log p(y^s) + log p(g^s)) into the parameter gradients,
// scaled by `scale`. Throws kEmptyReferences.
ScstResult scst_update(const Captioner& model, const CaptionInput& input,
                       const std::vector<Tokens>& references, const CorpusStats& stats,
                       const Vocabulary& vocab, std::uint64_t sample_seed, int max_len,
                       double scale = 1.0);

struct CaptionerTrainOptions {
  int epochs = 20;
  int batch = 32;
  double lr = 5e-4;
  double lr_decay = 0.8;  // per epoch
  double gate_weight = 1.0;
  int patience = 3;
  int max_len = 20;
  std::uint64_t seed = 0;
  // Reload the parameters of the best validation epoch when training ends.
  bool restore_best = true;
};

struct CaptionerEpochLog {
  int epoch = 0;
  double train_loss = 0;    // XE: mean loss; RL: mean sampled reward
  double train_reward = 0;  // RL: mean sampled reward, XE: unused
  double val_cider = 0;
  double lr = 0;
};

double validation_cider(const Captioner& model, const std::vector<CaptionExample>& val,
                        const Vocabulary& vocab, int max_len);
std::vector<Tokens> decode_tokens(const Captioner& model,
                                  const std::vector<CaptionExample>& examples,
                                  const Vocabulary& vocab, const DecodeOptions& options);

// Both stages keep the parameters of the best validation CIDEr-D epoch and
// stop after `patience` epochs without improvement.
std::vector<CaptionerEpochLog> train_captioner_xe(Captioner& model,
                                                  const std::vector<CaptionExample>& train,
                                                  const std::vector<CaptionExample>& val,
                                                  const Vocabulary& vocab,
                                                  const CaptionerTrainOptions& options);
std::vector<CaptionerEpochLog> train_captioner_rl(Captioner& model,
                                                  const std::vector<CaptionExample>& train,
                                                  const std::vector<CaptionExample>& val,
                                                  const Vocabulary& vocab,
                                                  const CaptionerTrainOptions& options);

// Mean CIDEr-D reward of `samples` sampled captions per example; sample s of
// example i uses seed + i * samples + s.
double mean_sample_reward(const Captioner& model, const std::vector<CaptionExample>& examples,
                          const Vocabulary& vocab, const CorpusStats& stats, int max_len,
                          std::uint64_t seed, int samples = 1);

}  // namespace vsrcap

#endif  // VSRCAP_CAPTIONER_HPP_
