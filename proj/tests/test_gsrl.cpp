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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "vsrcap/config.hpp"
#include "vsrcap/gsrl.hpp"

namespace vsrcap {
namespace {

using testing::random_matrix;

RoleId R(const char* name) { return *role_from_name(name); }

GsrlConfig small_config() { return GsrlConfig{6, 4, 5, 8}; }

const Eigen::MatrixXd& P(GsrlModel& m, const std::string& name) {
  return m.store().find(name)->value;
}

double relu(double x) { return x > 0 ? x : 0; }

// Straight-line restatement of the scorer on raw parameter tables.
double reference_score(GsrlModel& m, int verb, RoleId role, const Eigen::VectorXd& global,
                       const Eigen::VectorXd& set_feature) {
  const auto& c = m.config();
  Eigen::VectorXd x(c.d_vb + c.d_s + c.d_v);
  x << m.verb_table().col(verb), m.role_table().col(role), global;
  Eigen::VectorXd q = P(m, "gsrl.w_q.weight") * x;
  Eigen::VectorXd f = P(m, "gsrl.w_f.weight") * set_feature;
  Eigen::VectorXd h(q.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = q(i) * f(i);
  for (int layer = 0; layer < 4; ++layer) {
    const std::string base = "gsrl.scorer." + std::to_string(layer);
    Eigen::VectorXd z = P(m, base + ".weight") * h + P(m, base + ".bias");
    if (layer < 3) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = relu(z(i));
    }
    h = z;
  }
  return 1.0 / (1.0 + std::exp(-h(0)));
}

TEST(Gsrl, ScorerHasFourLayersEndingInOneUnit) {
  GsrlModel m(GsrlConfig{}, {"a"}, 1);
  EXPECT_EQ(P(m, "gsrl.scorer.0.weight").rows(), 64);
  EXPECT_EQ(P(m, "gsrl.scorer.1.weight").rows(), 32);
  EXPECT_EQ(P(m, "gsrl.scorer.2.weight").rows(), 16);
  EXPECT_EQ(P(m, "gsrl.scorer.3.weight").rows(), 1);
  EXPECT_EQ(m.store().find("gsrl.scorer.4.weight"), nullptr);
}

TEST(Gsrl, ZeroParametersScoreOneHalf) {
  GsrlModel m(small_config(), {"a", "b"}, 3);
  for (auto* p : m.store().all()) p->value.setZero();
  std::mt19937_64 rng(1);
  EXPECT_DOUBLE_EQ(m.score_pair(1, R("LOC"), random_matrix(6, 1, rng), random_matrix(6, 1, rng)),
                   0.5);
  m.store().find("gsrl.scorer.3.bias")->value(0, 0) = 1.3;
  EXPECT_NEAR(m.score_pair(0, R("Arg0"), random_matrix(6, 1, rng), random_matrix(6, 1, rng)),
              1.0 / (1.0 + std::exp(-1.3)), 1e-15);
}

TEST(Gsrl, ScoreMatchesFormulaTranscription) {
  GsrlModel m(small_config(), {"a", "b", "c"}, 5);
  std::mt19937_64 rng(2);
  for (auto* p : m.store().all()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const int verb = trial % 3;
    const RoleId role = static_cast<RoleId>(trial % kNumRoles);
    const Eigen::VectorXd g = random_matrix(6, 1, rng), f = random_matrix(6, 1, rng);
    const double got = m.score_pair(verb, role, g, f);
    EXPECT_NEAR(got, reference_score(m, verb, role, g, f), 1e-12);
    EXPECT_GT(got, 0.0);
    EXPECT_LT(got, 1.0);
  }
}

TEST(Gsrl, DimensionMismatchRejected) {
  GsrlModel m(small_config(), {"a"}, 5);
  try {
    m.score_pair(0, R("Arg0"), Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(m.verb_id("zzz"), Error);
}

TEST(Gsrl, ScoresEquivariantInSetOrder) {
  GsrlModel m(small_config(), {"a"}, 8);
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd sets = random_matrix(6, 5, rng);
  const Eigen::VectorXd g = random_matrix(6, 1, rng);
  const std::vector<RoleId> roles = {R("Arg0"), R("LOC")};
  const auto base = m.score_matrix(0, roles, g, sets);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  Eigen::MatrixXd permuted(6, 5);
  for (int j = 0; j < 5; ++j) permuted.col(j) = sets.col(perm[static_cast<std::size_t>(j)]);
  const auto moved = m.score_matrix(0, roles, g, permuted);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_NEAR(moved(i, j), base(i, perm[static_cast<std::size_t>(j)]), 1e-14);
    }
  }
}

TEST(Gsrl, TopSetSelection) {
  Eigen::MatrixXd s(1, 3);
  s << 0.2, 0.9, 0.1;
  auto r = select_top_sets({R("Arg0")}, {1}, s);
  EXPECT_EQ(r.assignment.at(SubRole{R("Arg0"), 1}), 1);
  s << 0.5, 0.5, 0.1;
  r = select_top_sets({R("LOC")}, {2}, s);
  EXPECT_EQ(r.chosen.at(R("LOC")), (std::vector<int>{0, 1}));
  EXPECT_EQ(r.assignment.at(SubRole{R("LOC"), 1}), 0);
  EXPECT_EQ(r.assignment.at(SubRole{R("LOC"), 2}), 1);
  s << 0.1, 0.5, 0.5;
  r = select_top_sets({R("LOC")}, {2}, s);
  EXPECT_EQ(r.chosen.at(R("LOC")), (std::vector<int>{1, 2}));
  try {
    select_top_sets({R("LOC")}, {4}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotEnoughSets);
  }
}

TEST(Gsrl, GroundingInvariantToSetOrder) {
  const auto grammar = default_grammar(6);
  auto samples = generate_dataset(grammar, 10, 3);
  GsrlModel m(small_config(), grammar.lexicon().verbs(), 2);
  std::mt19937_64 rng(5);
  for (auto& s : samples) {
    const auto base = ground(m, s, s.gt_vsr);
    std::vector<int> perm(s.sets.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SceneSample p = s;
    for (std::size_t j = 0; j < perm.size(); ++j) p.sets[j] = s.sets[static_cast<std::size_t>(perm[j])];
    const auto moved = ground(m, p, p.gt_vsr);
    for (const auto& [sub, set] : moved.assignment) {
      EXPECT_EQ(perm[static_cast<std::size_t>(set)], base.assignment.at(sub));
    }
    // The verb sub-role never takes a set; every role gets n_i distinct sets.
    EXPECT_FALSE(base.assignment.count(SubRole::verb()));
    for (const auto& rc : s.gt_vsr.roles) {
      const auto& c = base.chosen.at(rc.role);
      EXPECT_EQ(static_cast<int>(c.size()), rc.count);
      EXPECT_EQ(std::set<int>(c.begin(), c.end()).size(), c.size());
    }
  }
}

double bce_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& y) {
  double total = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      total -= y(i, j) == 1.0 ? std::log(a(i, j)) : std::log(1.0 - a(i, j));
    }
  }
  return total;
}

TEST(Gsrl, LossOracles) {
  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(3, 4, 0.5);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(3, 4);
  y(0, 1) = y(2, 3) = 1;
  EXPECT_NEAR(gsrl_loss(half, y), 12 * std::log(2.0), 1e-12);
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    Eigen::MatrixXd a = (y.array() * (1 - 2 * eps) + eps).matrix();
    const double l = gsrl_loss(a, y);
    EXPECT_NEAR(l, -12 * std::log(1 - eps), 1e-9);
    EXPECT_GE(l, 0.0);
  }
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd a(2, 5), lab(2, 5);
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      a.data()[k] = u(rng);
      lab.data()[k] = rng() % 2 ? 1.0 : 0.0;
    }
    EXPECT_NEAR(gsrl_loss(a, lab), bce_oracle(a, lab), 1e-10);
    // The logit form agrees with the probability form.
    ad::Tape t(false);
    Eigen::MatrixXd z(1, 10);
    for (int r = 0; r < 2; ++r) {
      for (int j = 0; j < 5; ++j) z(0, r * 5 + j) = std::log(a(r, j) / (1 - a(r, j)));
    }
    EXPECT_NEAR(gsrl_loss_logits(t.constant(z), lab).scalar(), bce_oracle(a, lab), 1e-10);
  }
  try {
    gsrl_loss(half, Eigen::MatrixXd::Zero(2, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Gsrl, LossGradientMatchesFiniteDifferences) {
  GsrlModel m(small_config(), {"a", "b"}, 9);
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd sets = random_matrix(6, 4, rng);
  const Eigen::VectorXd g = random_matrix(6, 1, rng);
  const std::vector<RoleId> roles = {R("Arg1"), R("TMP")};
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(2, 4);
  labels(0, 2) = labels(1, 0) = 1;
  auto f = [&](ad::Tape& t) { return gsrl_loss_logits(m.logits(t, 1, roles, g, sets), labels); };
  EXPECT_LT(testing::max_grad_error(m.store().all(), f), 1e-4);
}

TEST(Gsrl, LabelsMarkGroundTruthSets) {
  const auto samples = generate_dataset(default_grammar(6), 20, 8);
  for (const auto& s : samples) {
    std::vector<RoleId> roles;
    for (const auto& rc : s.gt_vsr.roles) roles.push_back(rc.role);
    const auto y = gsrl_labels(s, roles);
    for (std::size_t i = 0; i < roles.size(); ++i) {
      EXPECT_EQ(y.row(static_cast<Eigen::Index>(i)).sum(), s.gt_vsr.roles[i].count);
      for (int set : s.gt_sets_of(roles[i])) EXPECT_EQ(y(static_cast<Eigen::Index>(i), set), 1.0);
    }
  }
}

TEST(Gsrl, TrainingRecipeLearnsGrounding) {
  const RunConfig cfg;
  const auto grammar = cfg.grammar();
  const auto train = generate_dataset(grammar, 500, 101);
  const auto held_out = generate_dataset(grammar, 200, 202);
  GsrlModel m(cfg.gsrl_config(), grammar.lexicon().verbs(), 1);
  const auto logs = train_gsrl(m, train, {}, cfg.gsrl_options());
  ASSERT_GE(logs.size(), 3u);
  EXPECT_LT(logs[1].train_loss, logs[0].train_loss);
  EXPECT_LT(logs[2].train_loss, logs[1].train_loss);
  EXPECT_GE(gsrl_top1_accuracy(m, held_out), 0.9);
}

}  // namespace
}  // namespace vsrcap
