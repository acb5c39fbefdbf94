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

#include <sstream>

#include "test_util.hpp"
#include "vsrcap/config.hpp"

namespace vsrcap {
namespace {

using testing::error_code_of;

TEST(Config, ParsesKeyValueLines) {
  const auto c = parse_config(
      "# comment\n\n  n_train = 40\nxe_lr=0.5\nshare_attention = false\n"
      "grouping = singleton\nseed = 7\nout = /tmp/x y\n");
  EXPECT_EQ(c.n_train, 40);
  EXPECT_EQ(c.xe_lr, 0.5);
  EXPECT_FALSE(c.share_attention);
  EXPECT_EQ(c.grouping, "singleton");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out, "/tmp/x y");
  EXPECT_EQ(c.grammar().grouping, Grouping::kSingleton);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(error_code_of([] { parse_config("no_such_key = 1\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("n_train = 4x\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("n_train = 1.5\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("share_attention = maybe\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("grouping = blob\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("profile = huge\n"); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(error_code_of([] { parse_config("n_train 40\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(error_code_of([] { load_config("/nonexistent/vsrcap.cfg"); }), ErrorCode::kIoError);
}

TEST(Config, SerializeRoundTrips) {
  auto c = parse_config("profile = full\nn_train = 12\nrl_lr = 1.25e-05\nbeam = 3\n");
  const auto text = c.serialize();
  EXPECT_EQ(parse_config(text).serialize(), text);
  std::vector<std::string> keys;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) keys.push_back(line.substr(0, line.find(" = ")));
  EXPECT_EQ(keys, config_keys());
}

TEST(Config, ProfilesSetWidths) {
  const auto desk = parse_config("profile = desk\n");
  EXPECT_EQ(desk.serialize(), RunConfig{}.serialize());
  const auto full = parse_config("profile = full\ncap_hidden = 64\n");
  EXPECT_EQ(full.profile, "full");
  EXPECT_EQ(full.s_d_model, 512);
  EXPECT_EQ(full.gsrl_d_a, 512);
  EXPECT_EQ(full.cap_d_w, 512);
  EXPECT_EQ(full.cap_hidden, 64);
  // A profile line resets keys set before it.
  EXPECT_EQ(parse_config("cap_hidden = 64\nprofile = full\n").cap_hidden, 512);
}

TEST(Config, FingerprintsFollowStageDependencies) {
  const RunConfig base;
  const Stage all[] = {Stage::kData, Stage::kGsrl, Stage::kSsp, Stage::kCaptionerXe,
                       Stage::kCaptionerRl};
  auto changed = [&](const std::string& key, const std::string& value) {
    RunConfig c = base;
    c.set(key, value);
    std::vector<Stage> out;
    for (Stage s : all) {
      if (c.fingerprint(s) != base.fingerprint(s)) out.push_back(s);
    }
    return out;
  };
  const std::vector<Stage> everything(std::begin(all), std::end(all));
  EXPECT_EQ(changed("seed", "3"), everything);
  EXPECT_EQ(changed("d_v", "32"), everything);
  EXPECT_EQ(changed("gsrl_lr", "0.1"), std::vector<Stage>{Stage::kGsrl});
  EXPECT_EQ(changed("sinkhorn_iters", "5"), std::vector<Stage>{Stage::kSsp});
  EXPECT_EQ(changed("cap_hidden", "8"), (std::vector<Stage>{Stage::kCaptionerXe, Stage::kCaptionerRl}));
  EXPECT_EQ(changed("rl_lr", "0.1"), std::vector<Stage>{Stage::kCaptionerRl});
  EXPECT_TRUE(changed("beam", "2").empty());
  EXPECT_TRUE(changed("out", "elsewhere").empty());
  EXPECT_TRUE(changed("multi_reference", "true").empty());
  EXPECT_EQ(base.fingerprint(Stage::kGsrl), RunConfig{}.fingerprint(Stage::kGsrl));
  EXPECT_EQ(base.fingerprint(Stage::kGsrl).size(), 16u);
}

TEST(Config, DerivedOptions) {
  const auto c = parse_config("seed = 100\nxe_epochs = 3\nrl_epochs = 2\nrl_lr = 0.25\n");
  EXPECT_EQ(c.xe_options().epochs, 3);
  EXPECT_EQ(c.rl_options().epochs, 2);
  EXPECT_EQ(c.rl_options().lr, 0.25);
  EXPECT_EQ(c.rl_options().max_len, c.max_len);
  EXPECT_NE(c.xe_options().seed, c.rl_options().seed);
  EXPECT_EQ(c.captioner_config(30).vocab, 30);
  EXPECT_EQ(c.r_level_config(53).num_classes, 53);
  EXPECT_EQ(c.r_level_config(53).sinkhorn_iters, 20);
  EXPECT_EQ(c.gsrl_config().d_v, c.d_v);
}

}  // namespace
}  // namespace vsrcap
