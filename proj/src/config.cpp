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

#include "vsrcap/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "vsrcap/checkpoint.hpp"
#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

using Slot = std::variant<int*, double*, bool*, std::string*, std::uint64_t*>;

struct Field {
  const char* key;
  Stage group;
  Slot slot;
};

// Keys that never enter a fingerprint: profile, output path, decoding and
// evaluation options.
constexpr auto kNoGroup = static_cast<Stage>(99);

std::vector<Field> fields(RunConfig& c) {
  const Stage d = Stage::kData, g = Stage::kGsrl, s = Stage::kSsp, x = Stage::kCaptionerXe,
              r = Stage::kCaptionerRl;
  return {
      {"profile", kNoGroup, &c.profile},
      {"seed", d, &c.seed},
      {"out", kNoGroup, &c.out},
      {"n_train", d, &c.n_train},
      {"n_val", d, &c.n_val},
      {"n_test", d, &c.n_test},
      {"d_v", d, &c.d_v},
      {"grammar_seed", d, &c.grammar_seed},
      {"grouping", d, &c.grouping},
      {"gsrl_d_vb", g, &c.gsrl_d_vb},
      {"gsrl_d_s", g, &c.gsrl_d_s},
      {"gsrl_d_a", g, &c.gsrl_d_a},
      {"gsrl_epochs", g, &c.gsrl_epochs},
      {"gsrl_batch", g, &c.gsrl_batch},
      {"gsrl_lr", g, &c.gsrl_lr},
      {"gsrl_lr_decay", g, &c.gsrl_lr_decay},
      {"gsrl_lr_every", g, &c.gsrl_lr_every},
      {"s_d_model", s, &c.s_d_model},
      {"s_heads", s, &c.s_heads},
      {"s_layers", s, &c.s_layers},
      {"s_d_ff", s, &c.s_d_ff},
      {"s_max_len", s, &c.s_max_len},
      {"r_d_r", s, &c.r_d_r},
      {"r_d_c", s, &c.r_d_c},
      {"r_hidden", s, &c.r_hidden},
      {"n_max", s, &c.n_max},
      {"sinkhorn_iters", s, &c.sinkhorn_iters},
      {"ssp_epochs", s, &c.ssp_epochs},
      {"ssp_batch", s, &c.ssp_batch},
      {"s_lr", s, &c.s_lr},
      {"r_lr", s, &c.r_lr},
      {"ssp_lr_decay", s, &c.ssp_lr_decay},
      {"ssp_lr_every", s, &c.ssp_lr_every},
      {"cap_d_w", x, &c.cap_d_w},
      {"cap_hidden", x, &c.cap_hidden},
      {"cap_d_att", x, &c.cap_d_att},
      {"share_attention", x, &c.share_attention},
      {"xe_epochs", x, &c.xe_epochs},
      {"xe_batch", x, &c.xe_batch},
      {"xe_lr", x, &c.xe_lr},
      {"xe_lr_decay", x, &c.xe_lr_decay},
      {"xe_gate_weight", x, &c.xe_gate_weight},
      {"patience", x, &c.patience},
      {"max_len", x, &c.max_len},
      {"rl_epochs", r, &c.rl_epochs},
      {"rl_batch", r, &c.rl_batch},
      {"rl_lr", r, &c.rl_lr},
      {"rl_lr_decay", r, &c.rl_lr_decay},
      {"beam", kNoGroup, &c.beam},
      {"multi_reference", kNoGroup, &c.multi_reference},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string value_of(const Slot& slot) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(*p);
        } else {
          return std::to_string(*p);
        }
      },
      slot);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidInput, "bad value '" + v + "' for " + key);
  }
  return out;
}

bool depends_on(Stage stage, Stage group) {
  if (group == kNoGroup) return false;
  if (group == Stage::kData || group == stage) return true;
  return stage == Stage::kCaptionerRl && group == Stage::kCaptionerXe;
}

}  // namespace

void RunConfig::apply_profile(const std::string& name) {
  if (name == "desk") {
    *this = RunConfig{};
    return;
  }
  if (name != "full") throw Error(ErrorCode::kInvalidInput, "unknown profile " + name);
  *this = RunConfig{};
  profile = "full";
  gsrl_d_vb = gsrl_d_s = 300;
  gsrl_d_a = 512;
  gsrl_lr = 1e-5;
  s_d_model = 512;
  s_d_ff = 2048;
  r_d_r = 512;
  r_d_c = 300;
  r_hidden = 512;
  s_lr = r_lr = 1e-4;
  cap_d_w = cap_hidden = cap_d_att = 512;
  xe_batch = rl_batch = 32;
  xe_lr = 5e-4;
  xe_lr_decay = 0.8;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "profile") {
    apply_profile(value);
    return;
  }
  for (auto& f : fields(*this)) {
    if (key != f.key) continue;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::string>) {
            *p = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") {
              *p = true;
            } else if (value == "false" || value == "0") {
              *p = false;
            } else {
              throw Error(ErrorCode::kInvalidInput, "bad boolean '" + value + "' for " + key);
            }
          } else {
            *p = parse_number<T>(key, value);
          }
        },
        f.slot);
    if (grouping != "class" && grouping != "singleton") {
      throw Error(ErrorCode::kInvalidInput, "grouping must be class or singleton");
    }
    return;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown config key " + key);
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& f : fields(const_cast<RunConfig&>(*this))) {
    out += std::string(f.key) + " = " + value_of(f.slot) + "\n";
  }
  return out;
}

std::string RunConfig::fingerprint(Stage stage) const {
  std::string text;
  for (const auto& f : fields(const_cast<RunConfig&>(*this))) {
    if (depends_on(stage, f.group)) text += std::string(f.key) + "=" + value_of(f.slot) + ";";
  }
  return hex64(fnv1a64(text));
}

SceneGrammar RunConfig::grammar() const {
  SceneGrammar g = default_grammar(d_v, grammar_seed);
  g.grouping = grouping == "singleton" ? Grouping::kSingleton : Grouping::kByClass;
  return g;
}

GsrlConfig RunConfig::gsrl_config() const { return {d_v, gsrl_d_vb, gsrl_d_s, gsrl_d_a}; }

SLevelConfig RunConfig::s_level_config() const {
  return {s_d_model, s_heads, s_layers, s_layers, s_d_ff, s_max_len};
}

RLevelConfig RunConfig::r_level_config(int num_classes) const {
  RLevelConfig c;
  c.d_v = d_v;
  c.d_r = r_d_r;
  c.d_c = r_d_c;
  c.hidden = r_hidden;
  c.n_max = n_max;
  c.num_classes = num_classes;
  c.sinkhorn_iters = sinkhorn_iters;
  return c;
}

CaptionerConfig RunConfig::captioner_config(int vocab) const {
  CaptionerConfig c;
  c.vocab = vocab;
  c.d_v = d_v;
  c.d_w = cap_d_w;
  c.hidden = cap_hidden;
  c.d_att = cap_d_att;
  c.share_attention = share_attention;
  return c;
}

GsrlTrainOptions RunConfig::gsrl_options() const {
  return {gsrl_epochs, gsrl_batch, gsrl_lr, gsrl_lr_decay, gsrl_lr_every, seed + 11};
}

SspTrainOptions RunConfig::s_level_options() const {
  return {ssp_epochs, ssp_batch, s_lr, ssp_lr_decay, ssp_lr_every, seed + 12};
}

SspTrainOptions RunConfig::r_level_options() const {
  return {ssp_epochs, ssp_batch, r_lr, ssp_lr_decay, ssp_lr_every, seed + 13};
}

CaptionerTrainOptions RunConfig::xe_options() const {
  CaptionerTrainOptions o;
  o.epochs = xe_epochs;
  o.batch = xe_batch;
  o.lr = xe_lr;
  o.lr_decay = xe_lr_decay;
  o.gate_weight = xe_gate_weight;
  o.patience = patience;
  o.max_len = max_len;
  o.seed = seed + 14;
  return o;
}

CaptionerTrainOptions RunConfig::rl_options() const {
  CaptionerTrainOptions o = xe_options();
  o.epochs = rl_epochs;
  o.batch = rl_batch;
  o.lr = rl_lr;
  o.lr_decay = rl_lr_decay;
  o.seed = seed + 15;
  return o;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> config_keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const auto& f : fields(c)) out.emplace_back(f.key);
  return out;
}

}  // namespace vsrcap
