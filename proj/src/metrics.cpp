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

#include "vsrcap/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

constexpr double kCiderSigma = 6.0;

std::string join_ngram(const Tokens& t, std::size_t start, int n) {
  std::string key = t[start];
  for (int k = 1; k < n; ++k) {
    key += '\x1f';
    key += t[start + static_cast<std::size_t>(k)];
  }
  return key;
}

struct TfIdf {
  std::array<std::map<std::string, double>, 4> vec;
  std::array<double, 4> norm2{};
  int length = 0;
};

TfIdf tfidf(const Tokens& tokens, const CorpusStats& stats) {
  TfIdf out;
  out.length = static_cast<int>(tokens.size());
  for (int n = 1; n <= 4; ++n) {
    for (const auto& [g, tf] : ngram_counts(tokens, n)) {
      const double df = std::log(std::max(1.0, static_cast<double>(stats.document_frequency(g))));
      const double w = static_cast<double>(tf) * (stats.log_size() - df);
      out.vec[static_cast<std::size_t>(n - 1)][g] = w;
    }
    double s = 0.0;
    for (const auto& [g, w] : out.vec[static_cast<std::size_t>(n - 1)]) s += w * w;
    out.norm2[static_cast<std::size_t>(n - 1)] = s;
  }
  return out;
}

double tfidf_sim(const TfIdf& c, const TfIdf& r) {
  const double delta = static_cast<double>(c.length - r.length);
  const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  double total = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    double dot = 0.0;
    for (const auto& [g, w] : c.vec[n]) {
      auto it = r.vec[n].find(g);
      if (it != r.vec[n].end()) dot += std::min(w, it->second) * it->second;
    }
    double v = 0.0;
    if (c.norm2[n] != 0.0 && r.norm2[n] != 0.0) v = dot / std::sqrt(c.norm2[n] * r.norm2[n]);
    total += v * penalty;
  }
  return total / 4.0;
}

std::map<std::pair<RoleId, RoleId>, int> pair_counts(const std::vector<RoleId>& seq) {
  std::map<std::pair<RoleId, RoleId>, int> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size(); ++j) ++out[{seq[i], seq[j]}];
  }
  return out;
}

}  // namespace

std::map<std::string, int> ngram_counts(const Tokens& tokens, int n) {
  std::map<std::string, int> out;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    ++out[join_ngram(tokens, i, n)];
  }
  return out;
}

namespace {

struct BleuCounts {
  std::array<double, 4> match{};
  std::array<double, 4> total{};
  double cand_len = 0;
  double ref_len = 0;
};

void accumulate_bleu(const Tokens& cand, const std::vector<Tokens>& refs, BleuCounts& acc) {
  for (int n = 1; n <= 4; ++n) {
    std::map<std::string, int> max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : ngram_counts(cand, n)) {
      auto it = max_ref.find(g);
      acc.match[static_cast<std::size_t>(n - 1)] += std::min(c, it == max_ref.end() ? 0 : it->second);
      acc.total[static_cast<std::size_t>(n - 1)] += c;
    }
  }
  const auto c = static_cast<double>(cand.size());
  double best = -1.0;
  for (const auto& r : refs) {
    const auto rl = static_cast<double>(r.size());
    if (best < 0 || std::abs(rl - c) < std::abs(best - c) ||
        (std::abs(rl - c) == std::abs(best - c) && rl < best)) {
      best = rl;
    }
  }
  acc.cand_len += c;
  acc.ref_len += std::max(0.0, best);
}

double bleu_from(const BleuCounts& acc) {
  if (acc.cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (acc.total[n] == 0 || acc.match[n] == 0) return 0.0;
    log_sum += std::log(acc.match[n] / acc.total[n]);
  }
  const double bp = acc.cand_len > acc.ref_len ? 1.0 : std::exp(1.0 - acc.ref_len / acc.cand_len);
  return bp * std::exp(log_sum / 4.0);
}

}  // namespace

double bleu4(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferences, "bleu4");
  BleuCounts acc;
  accumulate_bleu(candidate, references, acc);
  return bleu_from(acc);
}

double corpus_bleu4(const std::vector<Tokens>& candidates,
                    const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one reference list per candidate");
  }
  BleuCounts acc;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw Error(ErrorCode::kEmptyReferences, "corpus_bleu4");
    accumulate_bleu(candidates[i], references[i], acc);
  }
  return bleu_from(acc);
}

CorpusStats::CorpusStats(const std::vector<std::vector<Tokens>>& references_per_image) {
  for (const auto& refs : references_per_image) {
    std::set<std::string> seen;
    for (const auto& r : refs) {
      for (int n = 1; n <= 4; ++n) {
        for (const auto& [g, c] : ngram_counts(r, n)) seen.insert(g);
      }
    }
    for (const auto& g : seen) ++df_[g];
  }
  size_ = static_cast<int>(references_per_image.size());
  log_size_ = size_ > 0 ? std::log(static_cast<double>(size_)) : 0.0;
}

int CorpusStats::document_frequency(const std::string& ngram) const {
  auto it = df_.find(ngram);
  return it == df_.end() ? 0 : it->second;
}

double cider_d(const Tokens& candidate, const std::vector<Tokens>& references,
               const CorpusStats& stats) {
  if (references.empty()) throw Error(ErrorCode::kEmptyReferences, "cider_d");
  const TfIdf c = tfidf(candidate, stats);
  double sum = 0.0;
  for (const auto& r : references) sum += tfidf_sim(c, tfidf(r, stats));
  return 10.0 * sum / static_cast<double>(references.size());
}

double role_set_recall(const std::vector<RoleId>& control, const std::vector<RoleId>& parsed,
                       bool distinct) {
  std::vector<RoleId> c, p;
  for (RoleId r : control) if (r != kVerbRole) c.push_back(r);
  for (RoleId r : parsed) if (r != kVerbRole) p.push_back(r);
  if (distinct) {
    std::set<RoleId> cs(c.begin(), c.end()), ps(p.begin(), p.end());
    if (cs.empty()) return 1.0;
    int hit = 0;
    for (RoleId r : cs) hit += ps.count(r) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(cs.size());
  }
  if (c.empty()) return 1.0;
  std::map<RoleId, int> pc;
  for (RoleId r : p) ++pc[r];
  int hit = 0;
  for (RoleId r : c) {
    if (pc[r] > 0) {
      --pc[r];
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(c.size());
}

double ordered_pair_recall(const std::vector<RoleId>& reference,
                           const std::vector<RoleId>& parsed) {
  const auto ref = pair_counts(reference);
  if (ref.empty()) return 1.0;
  const auto got = pair_counts(parsed);
  int total = 0, hit = 0;
  for (const auto& [pr, n] : ref) {
    total += n;
    auto it = got.find(pr);
    if (it != got.end()) hit += std::min(n, it->second);
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

RoleRecallReport role_recall(const Tokens& caption, const Vsr& control,
                             const SemanticStructure& structure, const SceneGrammar& grammar,
                             bool distinct) {
  RoleRecallReport out;
  const auto parse = grammar.try_inverse_parse(caption);
  if (!parse) {
    // Verb spotting on unparseable captions: first token that is a verb surface.
    for (const auto& tok : caption) {
      const auto it = std::find_if(grammar.verbs.begin(), grammar.verbs.end(),
                                   [&](const VerbEntry& v) { return v.surface == tok; });
      if (it != grammar.verbs.end()) {
        out.r_v = it->name == control.verb ? 1.0 : 0.0;
        break;
      }
    }
    return out;
  }
  out.parsed = true;
  out.r_v = parse->verb == control.verb ? 1.0 : 0.0;
  std::vector<RoleId> control_roles;
  for (const auto& s : expand_sub_roles(control)) control_roles.push_back(s.role);
  out.r_sr1 = role_set_recall(control_roles, parse->roles, distinct);
  std::vector<RoleId> reference;
  for (const auto& s : structure.subroles) reference.push_back(s.role);
  out.r_sr2 = ordered_pair_recall(reference, parse->roles);
  return out;
}

double div_n(const std::vector<Tokens>& captions, int n) {
  std::set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& c : captions) {
    total += c.size();
    for (const auto& [g, k] : ngram_counts(c, n)) distinct.insert(g);
  }
  return total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double self_cider(const std::vector<Tokens>& input, const CorpusStats& stats) {
  if (input.empty()) throw Error(ErrorCode::kEmptyCaptions, "self_cider");
  // Canonical order so the eigen-solve sees the same matrix for any permutation.
  std::vector<Tokens> captions = input;
  std::sort(captions.begin(), captions.end());
  const auto m = static_cast<Eigen::Index>(captions.size());
  if (m == 1) return 0.0;
  std::vector<TfIdf> vecs;
  for (const auto& c : captions) vecs.push_back(tfidf(c, stats));
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = tfidf_sim(vecs[static_cast<std::size_t>(i)], vecs[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& ci = captions[static_cast<std::size_t>(i)];
      const auto& cj = captions[static_cast<std::size_t>(j)];
      if (i == j || ci == cj) {
        k(i, j) = 1.0;
        continue;
      }
      const double norm = std::sqrt(s(i, i) * s(j, j));
      const double sym = 0.5 * (s(i, j) + s(j, i));
      k(i, j) = norm > 0.0 ? std::clamp(sym / norm, 0.0, 1.0) : 0.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const double ratio = root.maxCoeff() / root.sum();
  return std::clamp(-std::log(ratio) / std::log(static_cast<double>(m)), 0.0, 1.0);
}

}  // namespace vsrcap
