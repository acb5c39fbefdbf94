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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "vsrcap/dataset_io.hpp"
#include "vsrcap/scene.hpp"

namespace vsrcap {
namespace {

RoleId R(const char* name) { return *role_from_name(name); }

SceneGrammar one_verb_grammar() {
  SceneGrammar g;
  g.d_v = 4;
  g.classes.push_back({"dog", R("Arg0"), Eigen::VectorXd::Constant(4, 1.0)});
  g.wording[R("Arg0")] = {{}, "a"};
  VerbEntry v;
  v.name = "run";
  v.surface = "runs";
  v.roles = {R("Arg0")};
  v.role_classes[R("Arg0")] = {0};
  v.activity = Eigen::VectorXd::Zero(4);
  g.verbs.push_back(v);
  g.templates.push_back({0, 0, {R("Arg0"), kVerbRole}, 1.0});
  g.role_keep_prob = 1.0;
  return g;
}

TEST(Scene, SingleRoleGrammarGroundsTheOnlySet) {
  const auto g = one_verb_grammar();
  const auto data = generate_dataset(g, 1, 0);
  ASSERT_EQ(data.size(), 1u);
  const auto& s = data[0];
  ASSERT_EQ(s.sets.size(), 1u);
  ASSERT_EQ(s.gt_grounding.size(), 1u);
  EXPECT_EQ(s.gt_grounding.at(SubRole{R("Arg0"), 1}), 0);
  EXPECT_EQ(s.gt_caption, (std::vector<std::string>{"a", "dog", "runs"}));
  EXPECT_EQ(s.gt_gates, (std::vector<int>{0, 1, 1}));
}

TEST(Scene, GenerationIsDeterministic) {
  const auto g = default_grammar(16);
  const auto a = generate_dataset(g, 20, 5);
  const auto b = generate_dataset(g, 20, 5);
  DatasetMeta meta;
  EXPECT_EQ(dataset_to_string(meta, a), dataset_to_string(meta, b));
  const auto c = generate_dataset(g, 20, 6);
  EXPECT_NE(dataset_to_string(meta, a), dataset_to_string(meta, c));
  // Sample k does not depend on how many samples follow it.
  const auto prefix = generate_dataset(g, 5, 5);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(sample_to_json(prefix[k]), sample_to_json(a[k]));
}

TEST(Scene, DefaultGrammarShape) {
  const auto g = default_grammar();
  EXPECT_EQ(g.verbs.size(), 12u);
  EXPECT_EQ(g.classes.size(), 53u);
  EXPECT_EQ(g.d_v, 64);
  for (const auto& v : g.verbs) {
    EXPECT_LE(v.roles.size(), 5u);
    const auto t = g.templates_of(g.verb_index(v.name));
    EXPECT_GE(t.size(), 1u);
    EXPECT_LE(t.size(), 2u);
  }
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.hash(), default_grammar().hash());
  EXPECT_NE(g.hash(), default_grammar(64, 7).hash());
  EXPECT_NE(g.hash(), default_grammar(32).hash());
}

TEST(Scene, SampleInvariants) {
  const auto g = default_grammar();
  const auto data = generate_dataset(g, 200, 11);
  const auto lex = g.lexicon();
  for (const auto& s : data) {
    EXPECT_TRUE(validate_vsr(s.gt_vsr, lex));
    EXPECT_TRUE(validate_structure(s.gt_structure, s.gt_vsr));
    // Sets partition the proposals.
    std::vector<int> owner(s.proposals.size(), 0);
    for (const auto& set : s.sets) {
      ASSERT_FALSE(set.members.empty());
      for (int m : set.members) ++owner[static_cast<std::size_t>(m)];
    }
    for (int o : owner) EXPECT_EQ(o, 1);
    for (const auto& p : s.proposals) {
      EXPECT_LE(0.0, p.box.x_min);
      EXPECT_LT(p.box.x_min, p.box.x_max);
      EXPECT_LE(p.box.x_max, s.image_width);
      EXPECT_LE(0.0, p.box.y_min);
      EXPECT_LT(p.box.y_min, p.box.y_max);
      EXPECT_LE(p.box.y_max, s.image_height);
      EXPECT_TRUE(p.feature.allFinite());
    }
    // Every non-verb sub-role grounded once, to distinct sets.
    std::set<int> used;
    for (const auto& sub : s.gt_structure.subroles) {
      if (sub.is_verb()) continue;
      ASSERT_TRUE(s.gt_grounding.count(sub));
      EXPECT_TRUE(used.insert(s.gt_grounding.at(sub)).second);
    }
    // Gates cut the caption into one chunk per sub-role.
    ASSERT_EQ(s.gt_gates.size(), s.gt_caption.size());
    int shifts = 0;
    for (int gt : s.gt_gates) shifts += gt;
    EXPECT_EQ(shifts, static_cast<int>(s.gt_structure.size()));
    EXPECT_EQ(s.gt_gates.back(), 1);
    // The global feature is the proposal mean.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.d_v);
    for (const auto& p : s.proposals) mean += p.feature;
    mean /= static_cast<double>(s.proposals.size());
    EXPECT_LT((mean - s.global_feature).norm(), 1e-9);
    // The caption parses back to one role per sub-role in structure order.
    const auto parsed = g.inverse_parse(s.gt_caption);
    EXPECT_EQ(parsed.verb, s.gt_vsr.verb);
    std::vector<RoleId> roles;
    for (const auto& sub : s.gt_structure.subroles) roles.push_back(sub.role);
    EXPECT_EQ(parsed.roles, roles);
  }
}

TEST(Scene, ClassConditionalMeansNearPrototypes) {
  const auto g = default_grammar();
  const auto data = generate_dataset(g, 500, 7);
  // Key: (class, verb) for entity proposals, (class, -1) for distractors.
  std::map<std::pair<int, int>, std::pair<Eigen::VectorXd, int>> acc;
  for (const auto& s : data) {
    std::set<int> grounded;
    for (const auto& [sub, set] : s.gt_grounding) grounded.insert(set);
    const int verb = g.verb_index(s.gt_vsr.verb);
    for (int j = 0; j < static_cast<int>(s.sets.size()); ++j) {
      const int key_verb = grounded.count(j) ? verb : -1;
      for (int m : s.sets[static_cast<std::size_t>(j)].members) {
        const auto& p = s.proposals[static_cast<std::size_t>(m)];
        auto& slot = acc[{p.class_id, key_verb}];
        if (slot.second == 0) slot.first = Eigen::VectorXd::Zero(g.d_v);
        slot.first += p.feature;
        ++slot.second;
      }
    }
  }
  int groups = 0;
  for (const auto& [key, sum_count] : acc) {
    const auto& [sum, m] = sum_count;
    Eigen::VectorXd expected = g.classes[static_cast<std::size_t>(key.first)].prototype;
    if (key.second >= 0) expected += g.verbs[static_cast<std::size_t>(key.second)].activity;
    const Eigen::VectorXd err = sum / static_cast<double>(m) - expected;
    const double bound = 3.0 * g.noise_sigma / std::sqrt(static_cast<double>(m));
    const double rms = std::sqrt(err.squaredNorm() / static_cast<double>(g.d_v));
    EXPECT_LT(rms, bound) << "class " << key.first << " verb " << key.second << " m " << m;
    ++groups;
  }
  EXPECT_GT(groups, 53);
}

TEST(Scene, RenderParseRoundTripForEveryTemplate) {
  const auto g = default_grammar();
  for (const auto& t : g.templates) {
    const auto rendered = g.render_template(t);
    const auto parsed = g.inverse_parse(rendered.tokens);
    EXPECT_EQ(parsed.template_id, t.id);
    EXPECT_EQ(parsed.verb, g.verbs[static_cast<std::size_t>(t.verb)].name);
    EXPECT_EQ(parsed.roles, t.order);
  }
}

TEST(Scene, GarbageIsUnparseable) {
  const auto g = default_grammar();
  EXPECT_FALSE(g.try_inverse_parse({"purple", "monkey", "dishwasher"}).has_value());
  try {
    g.inverse_parse({"purple"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnparseable);
  }
  EXPECT_FALSE(g.try_inverse_parse({}).has_value());
}

TEST(Scene, AmbiguousCaptionPicksLowerTemplateId) {
  SceneGrammar g = one_verb_grammar();
  VerbEntry dash = g.verbs[0];
  dash.name = "dash";
  g.verbs.push_back(dash);
  // Both verbs render "a dog runs"; template 0 belongs to the second verb.
  g.templates = {{0, 1, {R("Arg0"), kVerbRole}, 1.0}, {1, 0, {R("Arg0"), kVerbRole}, 1.0}};
  g.validate();
  const auto parsed = g.inverse_parse({"a", "dog", "runs"});
  EXPECT_EQ(parsed.template_id, 0);
  EXPECT_EQ(parsed.verb, "dash");
}

TEST(Scene, GrammarInconsistenciesDetected) {
  auto expect_bad = [](const SceneGrammar& g) {
    try {
      g.validate();
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kGrammarInconsistent);
    }
  };
  SceneGrammar g = one_verb_grammar();
  g.templates[0].order.push_back(R("LOC"));
  expect_bad(g);
  g = one_verb_grammar();
  g.templates[0].order = {R("Arg0")};
  expect_bad(g);
  g = one_verb_grammar();
  g.wording.clear();
  expect_bad(g);
  g = one_verb_grammar();
  g.verbs[0].role_classes[R("Arg0")] = {5};
  expect_bad(g);
  g = one_verb_grammar();
  g.templates.clear();
  expect_bad(g);
  EXPECT_THROW(generate_dataset(g, 1, 0), Error);
  EXPECT_THROW(generate_dataset(one_verb_grammar(), 0, 0), Error);
}

SceneSample two_set_sample() {
  SceneSample s;
  s.image_id = "x";
  s.d_v = 2;
  for (int k = 0; k < 2; ++k) {
    Proposal p;
    p.feature = Eigen::VectorXd::Constant(2, k);
    p.box = {0, 0, 10.0 * (k + 1), 10};
    s.proposals.push_back(p);
    s.sets.push_back({{k}, {}});
  }
  s.recompute_pooled();
  s.gt_vsr = {"ride", {{R("Arg0"), 1}, {R("LOC"), 2}}};
  s.gt_structure.subroles = {{R("Arg0"), 1}, SubRole::verb(), {R("LOC"), 1}, {R("LOC"), 2}};
  return s;
}

TEST(Scene, FillMissingRegions) {
  SceneSample full = two_set_sample();
  full.gt_grounding = {{{R("Arg0"), 1}, 0}, {{R("LOC"), 1}, 1}, {{R("LOC"), 2}, 0}};
  const auto same = fill_missing_regions(full);
  EXPECT_EQ(same.gt_grounding, full.gt_grounding);
  EXPECT_TRUE(same.filled.empty());

  SceneSample one = full;
  one.gt_grounding.erase(SubRole{R("LOC"), 2});
  one.set_scores = {0.9, 0.4};
  auto filled = fill_missing_regions(one);
  EXPECT_EQ(filled.gt_grounding.at(SubRole{R("LOC"), 2}), 0);
  EXPECT_EQ(filled.filled, (std::vector<SubRole>{{R("LOC"), 2}}));
  one.set_scores = {0.4, 0.9};
  EXPECT_EQ(fill_missing_regions(one).gt_grounding.at(SubRole{R("LOC"), 2}), 1);

  SceneSample two = full;
  two.gt_grounding.erase(SubRole{R("LOC"), 1});
  two.gt_grounding.erase(SubRole{R("LOC"), 2});
  two.set_scores = {0.5, 0.5};
  filled = fill_missing_regions(two);
  EXPECT_EQ(filled.gt_grounding.at(SubRole{R("LOC"), 1}), 0);
  EXPECT_EQ(filled.gt_grounding.at(SubRole{R("LOC"), 2}), 0);

  // Without scores the largest-area set wins.
  two.set_scores.clear();
  filled = fill_missing_regions(two);
  EXPECT_EQ(filled.gt_grounding.at(SubRole{R("LOC"), 1}), 1);

  SceneSample empty = full;
  empty.sets.clear();
  try {
    fill_missing_regions(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoProposals);
  }
}

TEST(Scene, ChunkIndexFromGates) {
  EXPECT_EQ(chunk_index_from_gates({0, 1, 1, 0, 0, 1}, 3), (std::vector<int>{0, 0, 1, 2, 2, 2}));
  EXPECT_EQ(chunk_index_from_gates({1, 1, 1}, 2), (std::vector<int>{0, 1, 1}));
}

TEST(Scene, VocabularyEncodesGrammarTokens) {
  const auto g = default_grammar();
  const auto vocab = g.vocabulary();
  EXPECT_EQ(vocab.token(Vocabulary::kPad), "<pad>");
  const std::vector<std::string> caption = {"a", "man", "riding"};
  EXPECT_EQ(vocab.decode(vocab.encode(caption)), caption);
  EXPECT_EQ(vocab.id("zzzz"), Vocabulary::kUnk);
}

}  // namespace
}  // namespace vsrcap
