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

// Run configuration: a flat `key = value` text file. Lines starting with '#'
// are comments. `profile = desk|full` selects the width defaults and must
// come before any other key it should not overwrite.

#ifndef VSRCAP_CONFIG_HPP_
#define VSRCAP_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vsrcap/captioner.hpp"
#include "vsrcap/gsrl.hpp"
#include "vsrcap/scene.hpp"
#include "vsrcap/ssp.hpp"

namespace vsrcap {

enum class Stage { kData, kGsrl, kSsp, kCaptionerXe, kCaptionerRl };

struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 2021;
  std::string out = "run";

  // Data.
  int n_train = 500;
  int n_val = 100;
  int n_test = 100;
  int d_v = 64;
  std::uint64_t grammar_seed = 2021;
  std::string grouping = "class";  // class | singleton

  // GSRL.
  int gsrl_d_vb = 32;
  int gsrl_d_s = 32;
  int gsrl_d_a = 64;
  int gsrl_epochs = 20;
  int gsrl_batch = 32;
  double gsrl_lr = 3e-3;
  double gsrl_lr_decay = 0.5;
  int gsrl_lr_every = 3;

  // SSP.
  int s_d_model = 64;
  int s_heads = 8;
  int s_layers = 3;
  int s_d_ff = 128;
  int s_max_len = 10;
  int r_d_r = 4;
  int r_d_c = 16;
  int r_hidden = 64;
  int n_max = 10;
  int sinkhorn_iters = 20;
  int ssp_epochs = 20;
  int ssp_batch = 32;
  double s_lr = 1e-3;
  double r_lr = 1e-2;
  double ssp_lr_decay = 0.6;
  int ssp_lr_every = 3;

  // Captioner.
  int cap_d_w = 64;
  int cap_hidden = 128;
  int cap_d_att = 128;
  bool share_attention = true;
  int xe_epochs = 25;
  int xe_batch = 4;
  double xe_lr = 2e-3;
  double xe_lr_decay = 0.9;
  double xe_gate_weight = 1.0;
  int patience = 3;
  int rl_epochs = 5;
  int rl_batch = 4;
  double rl_lr = 5e-5;
  double rl_lr_decay = 0.8;
  int max_len = 20;
  int beam = 5;

  // Evaluation.
  bool multi_reference = false;

  // Throws kInvalidInput on an unknown key or malformed value.
  void set(const std::string& key, const std::string& value);
  void apply_profile(const std::string& name);
  // Canonical `key = value` lines in declaration order.
  std::string serialize() const;
  // Hash over the keys that shape data and the models of `stage` and of
  // every stage it depends on.
  std::string fingerprint(Stage stage) const;

  SceneGrammar grammar() const;
  GsrlConfig gsrl_config() const;
  SLevelConfig s_level_config() const;
  RLevelConfig r_level_config(int num_classes) const;
  CaptionerConfig captioner_config(int vocab) const;
  GsrlTrainOptions gsrl_options() const;
  SspTrainOptions s_level_options() const;
  SspTrainOptions r_level_options() const;
  CaptionerTrainOptions xe_options() const;
  CaptionerTrainOptions rl_options() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::vector<std::string> config_keys();

}  // namespace vsrcap

#endif  // VSRCAP_CONFIG_HPP_
