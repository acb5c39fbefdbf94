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

// Caption metrics: BLEU-4, CIDEr-D, role recall against a control VSR,
// Div-n and self-CIDEr.

#ifndef VSRCAP_METRICS_HPP_
#define VSRCAP_METRICS_HPP_

#include <map>
#include <string>
#include <vector>

#include "vsrcap/scene.hpp"
#include "vsrcap/vsr.hpp"

namespace vsrcap {

using Tokens = std::vector<std::string>;

// n-gram counts keyed by the tokens joined with '\x1f'.
std::map<std::string, int> ngram_counts(const Tokens& tokens, int n);

// Sentence-level BLEU-4 without smoothing; closest reference length
// (shorter on ties) for the brevity penalty.
double bleu4(const Tokens& candidate, const std::vector<Tokens>& references);
// Corpus-level BLEU-4 with clipped counts and lengths summed over the corpus.
double corpus_bleu4(const std::vector<Tokens>& candidates,
                    const std::vector<std::vector<Tokens>>& references);

// Document frequencies over a reference corpus: each image contributes the
// set of n-grams of all its references.
class CorpusStats {
 public:
  CorpusStats() = default;
  explicit CorpusStats(const std::vector<std::vector<Tokens>>& references_per_image);
  int size() const { return size_; }
  double log_size() const { return log_size_; }
  int document_frequency(const std::string& ngram) const;

 private:
  std::map<std::string, int> df_;
  int size_ = 0;
  double log_size_ = 0;
};

// 10 x mean over n = 1..4 of the clipped tf-idf cosine times
// exp(-(len_c - len_r)^2 / (2 * 6^2)), averaged over references.
// Throws kEmptyReferences.
double cider_d(const Tokens& candidate, const std::vector<Tokens>& references,
               const CorpusStats& stats);

struct RoleRecallReport {
  double r_v = 0;
  double r_sr1 = 0;
  double r_sr2 = 0;
  bool parsed = false;
};

// Multiset recall of control sub-roles among the parsed roles; with
// `distinct` the role labels are compared as sets.
double role_set_recall(const std::vector<RoleId>& control, const std::vector<RoleId>& parsed,
                       bool distinct = false);
// Recall of the ordered pairs (a_i, a_j), i < j, of `reference` among those
// of `parsed`, counted as multisets. 1 when the reference has no pair.
double ordered_pair_recall(const std::vector<RoleId>& reference,
                           const std::vector<RoleId>& parsed);

// The reference order is `structure` collapsed to role labels (verb
// included). Unparseable captions score zero on both sub-role recalls; their
// verb is the first token that is some verb's surface form.
RoleRecallReport role_recall(const Tokens& caption, const Vsr& control,
                             const SemanticStructure& structure, const SceneGrammar& grammar,
                             bool distinct = false);

// Distinct n-grams over all captions divided by the total token count.
double div_n(const std::vector<Tokens>& captions, int n);

// Pairwise CIDEr-D kernel normalized by self-similarity; returns
// -log_m(sqrt(lambda_max) / sum_i sqrt(lambda_i)) in [0, 1].
// Throws kEmptyCaptions.
double self_cider(const std::vector<Tokens>& captions, const CorpusStats& stats);

}  // namespace vsrcap

#endif  // VSRCAP_METRICS_HPP_
