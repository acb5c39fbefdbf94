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

// Synthetic scene grammar: noun classes with feature prototypes, verbs with
// allowed roles, caption templates, and the generator that turns them into
// fully annotated samples (proposals, sets, VSR, structure, grounding,
// caption and shift-gate labels).

#ifndef VSRCAP_SCENE_HPP_
#define VSRCAP_SCENE_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vsrcap/vsr.hpp"

namespace vsrcap {

struct Box {
  double x_min = 0, y_min = 0, x_max = 1, y_max = 1;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  double center_x() const { return 0.5 * (x_min + x_max); }
};

struct Proposal {
  Eigen::VectorXd feature;
  int class_id = 0;
  Box box;
};

struct ProposalSet {
  std::vector<int> members;
  Eigen::VectorXd pooled;  // mean of member features
};

struct SceneSample {
  std::string image_id;
  int d_v = 0;
  double image_width = 640;
  double image_height = 480;
  std::vector<Proposal> proposals;
  std::vector<ProposalSet> sets;
  Eigen::VectorXd global_feature;  // mean over all proposals
  Vsr gt_vsr;
  SemanticStructure gt_structure;
  std::map<SubRole, int> gt_grounding;
  std::vector<std::string> gt_caption;
  std::vector<int> gt_gates;
  // Mean detection score per set; empty for synthetic data.
  std::vector<double> set_scores;
  // Sub-roles assigned by fill_missing_regions.
  std::vector<SubRole> filled;

  // Recomputes pooled set features and the global feature.
  void recompute_pooled();
  // Region features of a set as a d_v x |members| matrix.
  Eigen::MatrixXd set_features(int set_index) const;
  // Ground-truth sets of `role` in sub-role index order.
  std::vector<int> gt_sets_of(RoleId role) const;
  double set_area(int set_index) const;
  double set_center_x(int set_index) const;
};

// Token vocabulary shared by the captioner and the metrics.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();
  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct NounClass {
  std::string name;
  // Role whose slot this class fills; -1 for background-only classes.
  RoleId role_kind = -1;
  Eigen::VectorXd prototype;
};

// How a role is worded: the first sub-role renders lead + article + noun,
// later sub-roles of the same role render "and" + article + noun.
struct RoleWording {
  std::vector<std::string> lead;
  std::string article;
};

struct VerbEntry {
  std::string name;
  std::string surface;
  std::vector<RoleId> roles;
  std::map<RoleId, std::vector<int>> role_classes;
  Eigen::VectorXd activity;  // added to features of entities in the scene
};

struct CaptionTemplate {
  int id = 0;
  int verb = 0;
  std::vector<RoleId> order;  // includes kVerbRole exactly once
  double weight = 1.0;
};

struct ParseResult {
  int template_id = -1;
  std::string verb;
  std::vector<RoleId> roles;  // caption order, kVerbRole at the verb position
};

struct RenderedCaption {
  std::vector<std::string> tokens;
  std::vector<int> gates;  // 1 on the last token of every sub-role chunk
};

enum class Grouping { kByClass, kSingleton };

class SceneGrammar {
 public:
  int d_v = 64;
  double noise_sigma = 0.35;
  double activity_scale = 1.0;
  double image_width = 640;
  double image_height = 480;
  int max_count = 3;
  double extra_count_prob = 0.2;
  double role_keep_prob = 0.6;
  int min_distractors = 1;
  int max_distractors = 4;
  int max_set_size = 3;
  Grouping grouping = Grouping::kByClass;

  std::vector<NounClass> classes;
  std::map<RoleId, RoleWording> wording;
  std::vector<VerbEntry> verbs;
  std::vector<CaptionTemplate> templates;

  // Throws kGrammarInconsistent when a template slot has no role entry, a
  // role has no wording or classes, or a class points at a missing role.
  void validate() const;

  VerbLexicon lexicon() const;
  Vocabulary vocabulary() const;
  int verb_index(std::string_view verb) const;
  int class_index(std::string_view name) const;
  std::vector<int> templates_of(int verb) const;
  // Stable hash over every field that influences generated data.
  std::string hash() const;

  // Renders the chunks for `structure` with one noun class per non-verb
  // sub-role (same order as structure.subroles, verb entries ignored).
  RenderedCaption render(int verb, const SemanticStructure& structure,
                         const std::vector<int>& classes_per_subrole) const;
  // Renders a template with every role present once, using each role's
  // first class. Used by the render/parse round-trip checks.
  RenderedCaption render_template(const CaptionTemplate& t) const;

  // Lowest-id template whose pattern matches the whole caption; throws
  // kUnparseable when none does.
  ParseResult inverse_parse(const std::vector<std::string>& caption) const;
  std::optional<ParseResult> try_inverse_parse(
      const std::vector<std::string>& caption) const;
};

// 12 verbs over the role labels most frequent in captioning data, 53 noun
// classes, one or two caption templates per verb. Prototypes are drawn from
// `prototype_seed`.
SceneGrammar default_grammar(int d_v = 64, std::uint64_t prototype_seed = 2021);

// Deterministic in (grammar, n, seed); sample k uses a seed derived from
// (seed, k) so the output does not depend on generation order.
std::vector<SceneSample> generate_dataset(const SceneGrammar& grammar, int n,
                                          std::uint64_t seed);
SceneSample generate_sample(const SceneGrammar& grammar, std::uint64_t seed,
                            const std::string& image_id);

// Assigns every structure sub-role lacking a grounding: highest set score
// when scores exist, else the largest-area set; ties go to the lower index.
SceneSample fill_missing_regions(const SceneSample& sample);

// Sub-role index at each caption token derived from gate labels.
std::vector<int> chunk_index_from_gates(const std::vector<int>& gates, int k);

}  // namespace vsrcap

#endif  // VSRCAP_SCENE_HPP_
