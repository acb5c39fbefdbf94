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

#include "vsrcap/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "vsrcap/checkpoint.hpp"
#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

RoleId role(const char* name) { return *role_from_name(name); }

// Matches template slots starting at `slot` against caption[pos..]. Role
// slots may occur zero or more times (first chunk lead+article+noun, later
// chunks "and"+article+noun); the verb slot exactly once.
class TemplateMatcher {
 public:
  TemplateMatcher(const SceneGrammar& g, const CaptionTemplate& t,
                  const std::vector<std::string>& caption)
      : g_(g), t_(t), verb_(g.verbs[static_cast<std::size_t>(t.verb)]),
        caption_(caption) {}

  bool match(std::vector<RoleId>& roles) { return slots(0, 0, roles); }

 private:
  bool slots(std::size_t slot, std::size_t pos, std::vector<RoleId>& roles) {
    if (slot == t_.order.size()) return pos == caption_.size();
    const RoleId r = t_.order[slot];
    if (r == kVerbRole) {
      if (pos < caption_.size() && caption_[pos] == verb_.surface) {
        roles.push_back(kVerbRole);
        if (slots(slot + 1, pos + 1, roles)) return true;
        roles.pop_back();
      }
      return false;
    }
    // Longest chunk run first; fall back to fewer occurrences.
    std::vector<std::size_t> ends;
    std::size_t p = pos;
    while (true) {
      auto next = chunk(r, p, ends.empty());
      if (!next) break;
      p = *next;
      ends.push_back(p);
    }
    for (std::size_t k = ends.size(); k > 0; --k) {
      for (std::size_t j = 0; j < k; ++j) roles.push_back(r);
      if (slots(slot + 1, ends[k - 1], roles)) return true;
      roles.resize(roles.size() - k);
    }
    return slots(slot + 1, pos, roles);
  }

  std::optional<std::size_t> chunk(RoleId r, std::size_t pos, bool first) {
    const auto& w = g_.wording.at(r);
    std::vector<std::string> prefix;
    if (first) {
      prefix = w.lead;
    } else {
      prefix = {"and"};
    }
    prefix.push_back(w.article);
    if (pos + prefix.size() + 1 > caption_.size()) return std::nullopt;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (caption_[pos + i] != prefix[i]) return std::nullopt;
    }
    const std::string& noun = caption_[pos + prefix.size()];
    auto it = verb_.role_classes.find(r);
    if (it == verb_.role_classes.end()) return std::nullopt;
    for (int c : it->second) {
      if (g_.classes[static_cast<std::size_t>(c)].name == noun) {
        return pos + prefix.size() + 1;
      }
    }
    return std::nullopt;
  }

  const SceneGrammar& g_;
  const CaptionTemplate& t_;
  const VerbEntry& verb_;
  const std::vector<std::string>& caption_;
};

Box random_box(std::mt19937_64& rng, double w_img, double h_img) {
  std::uniform_real_distribution<double> uw(0.10 * w_img, 0.35 * w_img);
  std::uniform_real_distribution<double> uh(0.10 * h_img, 0.40 * h_img);
  const double w = uw(rng), h = uh(rng);
  std::uniform_real_distribution<double> ux(0.0, w_img - w);
  std::uniform_real_distribution<double> uy(0.0, h_img - h);
  Box b;
  b.x_min = ux(rng);
  b.y_min = uy(rng);
  b.x_max = b.x_min + w;
  b.y_max = b.y_min + h;
  return b;
}

Box jitter_box(const Box& b, std::mt19937_64& rng, double w_img, double h_img) {
  std::uniform_real_distribution<double> j(-0.03, 0.03);
  Box out;
  out.x_min = std::clamp(b.x_min + j(rng) * w_img, 0.0, w_img - 2.0);
  out.y_min = std::clamp(b.y_min + j(rng) * h_img, 0.0, h_img - 2.0);
  out.x_max = std::clamp(b.x_max + j(rng) * w_img, out.x_min + 1.0, w_img);
  out.y_max = std::clamp(b.y_max + j(rng) * h_img, out.y_min + 1.0, h_img);
  return out;
}

}  // namespace

void SceneSample::recompute_pooled() {
  global_feature = Eigen::VectorXd::Zero(d_v);
  for (const auto& p : proposals) global_feature += p.feature;
  if (!proposals.empty()) {
    global_feature /= static_cast<double>(proposals.size());
  }
  for (auto& s : sets) {
    s.pooled = Eigen::VectorXd::Zero(d_v);
    for (int m : s.members) {
      s.pooled += proposals[static_cast<std::size_t>(m)].feature;
    }
    if (!s.members.empty()) s.pooled /= static_cast<double>(s.members.size());
  }
}

Eigen::MatrixXd SceneSample::set_features(int set_index) const {
  const auto& s = sets.at(static_cast<std::size_t>(set_index));
  Eigen::MatrixXd m(d_v, static_cast<Eigen::Index>(s.members.size()));
  for (std::size_t k = 0; k < s.members.size(); ++k) {
    m.col(static_cast<Eigen::Index>(k)) =
        proposals[static_cast<std::size_t>(s.members[k])].feature;
  }
  return m;
}

std::vector<int> SceneSample::gt_sets_of(RoleId r) const {
  std::vector<int> out;
  for (int k = 1;; ++k) {
    auto it = gt_grounding.find(SubRole{r, k});
    if (it == gt_grounding.end()) break;
    out.push_back(it->second);
  }
  return out;
}

double SceneSample::set_area(int set_index) const {
  double a = 0.0;
  for (int m : sets.at(static_cast<std::size_t>(set_index)).members) {
    a += proposals[static_cast<std::size_t>(m)].box.area();
  }
  return a;
}

double SceneSample::set_center_x(int set_index) const {
  const auto& s = sets.at(static_cast<std::size_t>(set_index));
  double x = 0.0;
  for (int m : s.members) x += proposals[static_cast<std::size_t>(m)].box.center_x();
  return s.members.empty() ? 0.0 : x / static_cast<double>(s.members.size());
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<bos>");
  add("<eos>");
  add("<unk>");
}

int Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  tokens_.push_back(token);
  const int id = static_cast<int>(tokens_.size()) - 1;
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void SceneGrammar::validate() const {
  auto bad = [](const std::string& m) {
    return Error(ErrorCode::kGrammarInconsistent, m);
  };
  for (const auto& c : classes) {
    if (c.prototype.size() != d_v) throw bad("prototype size of " + c.name);
    if (c.role_kind != -1 && !is_semantic_role(c.role_kind)) {
      throw bad("class " + c.name + " has an invalid role kind");
    }
  }
  for (const auto& v : verbs) {
    if (v.roles.empty()) throw bad("verb " + v.name + " has no roles");
    for (RoleId r : v.roles) {
      if (!wording.count(r)) {
        throw bad("role " + std::string(role_name(r)) + " has no wording");
      }
      auto it = v.role_classes.find(r);
      if (it == v.role_classes.end() || it->second.empty()) {
        throw bad("verb " + v.name + " role " + std::string(role_name(r)) +
                  " has no classes");
      }
      for (int c : it->second) {
        if (c < 0 || c >= static_cast<int>(classes.size())) {
          throw bad("verb " + v.name + " references a missing class");
        }
      }
    }
  }
  for (const auto& t : templates) {
    if (t.verb < 0 || t.verb >= static_cast<int>(verbs.size())) {
      throw bad("template " + std::to_string(t.id) + " has no verb");
    }
    const auto& v = verbs[static_cast<std::size_t>(t.verb)];
    int verb_slots = 0;
    std::set<RoleId> seen;
    for (RoleId r : t.order) {
      if (!seen.insert(r).second) {
        throw bad("template " + std::to_string(t.id) + " repeats a slot");
      }
      if (r == kVerbRole) {
        ++verb_slots;
        continue;
      }
      if (std::find(v.roles.begin(), v.roles.end(), r) == v.roles.end()) {
        throw bad("template " + std::to_string(t.id) + " slot " +
                  std::string(role_name(r)) + " has no sub-role for verb " +
                  v.name);
      }
    }
    if (verb_slots != 1) {
      throw bad("template " + std::to_string(t.id) + " needs one verb slot");
    }
    for (RoleId r : v.roles) {
      if (!seen.count(r)) {
        throw bad("template " + std::to_string(t.id) + " misses role " +
                  std::string(role_name(r)));
      }
    }
  }
  for (std::size_t v = 0; v < verbs.size(); ++v) {
    if (templates_of(static_cast<int>(v)).empty()) {
      throw bad("verb " + verbs[v].name + " has no template");
    }
  }
}

VerbLexicon SceneGrammar::lexicon() const {
  VerbLexicon lex;
  for (const auto& v : verbs) {
    lex.add_verb(v.name, std::set<RoleId>(v.roles.begin(), v.roles.end()));
  }
  return lex;
}

Vocabulary SceneGrammar::vocabulary() const {
  Vocabulary vocab;
  vocab.add("and");
  for (const auto& [r, w] : wording) {
    for (const auto& t : w.lead) vocab.add(t);
    vocab.add(w.article);
  }
  for (const auto& v : verbs) vocab.add(v.surface);
  for (const auto& c : classes) vocab.add(c.name);
  return vocab;
}

int SceneGrammar::verb_index(std::string_view verb) const {
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    if (verbs[i].name == verb) return static_cast<int>(i);
  }
  return -1;
}

int SceneGrammar::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> SceneGrammar::templates_of(int verb) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (templates[i].verb == verb) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string SceneGrammar::hash() const {
  std::ostringstream os;
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << ',';
  };
  os << "d_v=" << d_v << ';';
  num(noise_sigma);
  num(activity_scale);
  num(image_width);
  num(image_height);
  os << max_count << ',' << min_distractors << ',' << max_distractors << ','
     << max_set_size << ',' << static_cast<int>(grouping) << ';';
  num(extra_count_prob);
  num(role_keep_prob);
  for (const auto& c : classes) {
    os << c.name << '/' << c.role_kind << ':';
    for (Eigen::Index i = 0; i < c.prototype.size(); ++i) num(c.prototype(i));
    os << ';';
  }
  for (const auto& [r, w] : wording) {
    os << r << '=';
    for (const auto& t : w.lead) os << t << ' ';
    os << w.article << ';';
  }
  for (const auto& v : verbs) {
    os << v.name << '/' << v.surface << ':';
    for (const auto& [r, cs] : v.role_classes) {
      os << r << '[';
      for (int c : cs) os << c << ' ';
      os << ']';
    }
    for (Eigen::Index i = 0; i < v.activity.size(); ++i) num(v.activity(i));
    os << ';';
  }
  for (const auto& t : templates) {
    os << t.id << '/' << t.verb << ':';
    for (RoleId r : t.order) os << r << ' ';
    num(t.weight);
    os << ';';
  }
  return hex64(fnv1a64(os.str()));
}

RenderedCaption SceneGrammar::render(
    int verb, const SemanticStructure& structure,
    const std::vector<int>& classes_per_subrole) const {
  const auto& v = verbs.at(static_cast<std::size_t>(verb));
  RenderedCaption out;
  std::size_t noun = 0;
  for (const auto& sub : structure.subroles) {
    std::size_t before = out.tokens.size();
    if (sub.is_verb()) {
      out.tokens.push_back(v.surface);
    } else {
      auto it = wording.find(sub.role);
      if (it == wording.end()) {
        throw Error(ErrorCode::kGrammarInconsistent,
                    "no wording for " + std::string(role_name(sub.role)));
      }
      if (noun >= classes_per_subrole.size()) {
        throw Error(ErrorCode::kGrammarInconsistent,
                    "template slot without a class");
      }
      if (sub.index == 1) {
        for (const auto& t : it->second.lead) out.tokens.push_back(t);
      } else {
        out.tokens.push_back("and");
      }
      out.tokens.push_back(it->second.article);
      out.tokens.push_back(
          classes.at(static_cast<std::size_t>(classes_per_subrole[noun++])).name);
    }
    for (std::size_t k = before; k + 1 < out.tokens.size(); ++k) {
      out.gates.push_back(0);
    }
    out.gates.push_back(1);
  }
  return out;
}

RenderedCaption SceneGrammar::render_template(const CaptionTemplate& t) const {
  const auto& v = verbs.at(static_cast<std::size_t>(t.verb));
  SemanticStructure s;
  std::vector<int> cls;
  for (RoleId r : t.order) {
    s.subroles.push_back(SubRole{r, 1});
    if (r != kVerbRole) cls.push_back(v.role_classes.at(r).front());
  }
  return render(t.verb, s, cls);
}

std::optional<ParseResult> SceneGrammar::try_inverse_parse(
    const std::vector<std::string>& caption) const {
  for (const auto& t : templates) {
    std::vector<RoleId> roles;
    TemplateMatcher m(*this, t, caption);
    if (m.match(roles)) {
      return ParseResult{t.id, verbs[static_cast<std::size_t>(t.verb)].name,
                         std::move(roles)};
    }
  }
  return std::nullopt;
}

ParseResult SceneGrammar::inverse_parse(
    const std::vector<std::string>& caption) const {
  auto r = try_inverse_parse(caption);
  if (!r) throw Error(ErrorCode::kUnparseable, "no template matches caption");
  return *r;
}

SceneGrammar default_grammar(int d_v, std::uint64_t prototype_seed) {
  SceneGrammar g;
  g.d_v = d_v;
  std::mt19937_64 rng(prototype_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vec = [&](double scale) {
    Eigen::VectorXd v(d_v);
    for (int i = 0; i < d_v; ++i) v(i) = normal(rng) * scale;
    return v;
  };

  const RoleId arg0 = role("Arg0"), arg1 = role("Arg1"), arg2 = role("Arg2");
  const RoleId loc = role("LOC"), dir = role("DIR"), gol = role("GOL");
  const RoleId tmp = role("TMP"), mnr = role("MNR"), com = role("COM");

  g.wording[arg0] = {{}, "a"};
  g.wording[arg1] = {{}, "a"};
  g.wording[arg2] = {{"with"}, "a"};
  g.wording[loc] = {{"at"}, "the"};
  g.wording[dir] = {{"toward"}, "the"};
  g.wording[gol] = {{"to"}, "the"};
  g.wording[tmp] = {{"during"}, "the"};
  g.wording[mnr] = {{"in"}, "a"};
  g.wording[com] = {{"along", "with"}, "the"};

  const std::vector<std::pair<RoleId, std::vector<std::string>>> kinds = {
      {arg0, {"man", "woman", "boy", "girl", "player", "chef"}},
      {arg1, {"horse", "bike", "skateboard", "surfboard", "book", "newspaper",
              "pizza", "cake", "sandwich", "ball", "frisbee", "umbrella",
              "kite", "guitar", "bag", "dog"}},
      {arg2, {"fork", "knife", "racket", "stick"}},
      {loc, {"street", "beach", "park", "field", "kitchen", "table"}},
      {dir, {"camera", "building", "river"}},
      {gol, {"net", "goal", "crowd"}},
      {tmp, {"sunset", "night", "game"}},
      {mnr, {"hurry", "group", "line"}},
      {com, {"family", "team", "friends"}},
      {-1, {"tree", "sign", "bench", "lamp", "cloud", "fence"}},
  };
  for (const auto& [kind, names] : kinds) {
    for (const auto& n : names) g.classes.push_back({n, kind, random_vec(1.0)});
  }
  auto ids = [&](std::initializer_list<const char*> names) {
    std::vector<int> out;
    for (const char* n : names) out.push_back(g.class_index(n));
    return out;
  };
  const auto persons = ids({"man", "woman", "boy", "girl", "player", "chef"});
  const auto places = ids({"street", "beach", "park", "field"});
  const auto indoor = ids({"kitchen", "table", "park"});
  const auto directions = ids({"camera", "building", "river"});
  const auto times = ids({"sunset", "night", "game"});
  const auto manners = ids({"hurry", "group", "line"});
  const auto companions = ids({"family", "team", "friends"});

  struct VerbSpec {
    const char* name;
    const char* surface;
    std::vector<std::pair<RoleId, std::vector<int>>> roles;
    std::vector<std::pair<std::vector<RoleId>, double>> orders;
  };
  const RoleId V = kVerbRole;
  const std::vector<VerbSpec> specs = {
      {"ride", "riding",
       {{arg0, persons}, {arg1, ids({"horse", "bike", "skateboard", "surfboard"})},
        {loc, places}, {dir, directions}, {tmp, times}},
       {{{arg0, V, arg1, loc, dir, tmp}, 0.75}, {{tmp, arg0, V, arg1, dir, loc}, 0.25}}},
      {"read", "reading",
       {{arg0, persons}, {arg1, ids({"book", "newspaper"})},
        {loc, ids({"park", "kitchen", "table", "beach"})}, {tmp, times},
        {com, companions}},
       {{{arg0, V, arg1, loc, com, tmp}, 1.0}}},
      {"eat", "eating",
       {{arg0, persons}, {arg1, ids({"pizza", "cake", "sandwich"})},
        {arg2, ids({"fork", "knife"})}, {loc, indoor}, {com, companions}},
       {{{arg0, V, arg1, arg2, loc, com}, 0.7}, {{arg0, V, arg1, loc, arg2, com}, 0.3}}},
      {"throw", "throwing",
       {{arg0, persons}, {arg1, ids({"ball", "frisbee"})},
        {gol, ids({"net", "goal", "crowd"})}, {loc, ids({"beach", "park", "field"})},
        {tmp, times}},
       {{{arg0, V, arg1, gol, loc, tmp}, 1.0}}},
      {"kick", "kicking",
       {{arg0, persons}, {arg1, ids({"ball"})}, {gol, ids({"net", "goal"})},
        {loc, ids({"field", "park", "street"})}, {mnr, manners}},
       {{{arg0, V, arg1, gol, loc, mnr}, 0.7}, {{mnr, arg0, V, arg1, gol, loc}, 0.3}}},
      {"hold", "holding",
       {{arg0, persons}, {arg1, ids({"umbrella", "kite", "bag", "guitar"})},
        {loc, ids({"street", "beach", "park"})}, {tmp, times}, {mnr, manners}},
       {{{arg0, V, arg1, loc, tmp, mnr}, 1.0}}},
      {"walk", "walking",
       {{arg0, persons}, {arg1, ids({"dog"})}, {loc, ids({"street", "park", "beach"})},
        {dir, directions}, {com, companions}},
       {{{arg0, V, arg1, dir, loc, com}, 0.7}, {{arg0, V, arg1, loc, dir, com}, 0.3}}},
      {"play", "playing",
       {{arg0, persons}, {arg1, ids({"guitar", "ball", "frisbee"})},
        {arg2, ids({"racket", "stick"})}, {loc, ids({"park", "field", "beach"})},
        {com, companions}},
       {{{arg0, V, arg1, arg2, loc, com}, 1.0}}},
      {"cut", "cutting",
       {{arg0, persons}, {arg1, ids({"cake", "pizza", "sandwich"})},
        {arg2, ids({"knife", "fork"})}, {loc, ids({"kitchen", "table"})},
        {mnr, manners}},
       {{{arg0, V, arg1, arg2, loc, mnr}, 1.0}}},
      {"sit", "sitting",
       {{arg0, persons}, {loc, ids({"beach", "park", "table", "kitchen"})},
        {com, companions}, {tmp, times}, {mnr, manners}},
       {{{arg0, V, loc, com, tmp, mnr}, 0.7}, {{tmp, arg0, V, loc, com, mnr}, 0.3}}},
      {"fly", "flying",
       {{arg0, persons}, {arg1, ids({"kite"})}, {loc, ids({"beach", "park", "field"})},
        {tmp, times}, {dir, directions}},
       {{{arg0, V, arg1, loc, dir, tmp}, 1.0}}},
      {"carry", "carrying",
       {{arg0, persons}, {arg1, ids({"bag", "surfboard", "umbrella", "book"})},
        {loc, ids({"street", "beach", "park"})}, {dir, directions},
        {com, companions}},
       {{{arg0, V, arg1, dir, loc, com}, 1.0}}},
  };
  for (const auto& s : specs) {
    VerbEntry v;
    v.name = s.name;
    v.surface = s.surface;
    for (const auto& [r, cs] : s.roles) {
      v.roles.push_back(r);
      v.role_classes[r] = cs;
    }
    v.activity = random_vec(g.activity_scale);
    const int vi = static_cast<int>(g.verbs.size());
    g.verbs.push_back(std::move(v));
    for (const auto& [order, w] : s.orders) {
      CaptionTemplate t;
      t.id = static_cast<int>(g.templates.size());
      t.verb = vi;
      t.order = order;
      t.weight = w;
      g.templates.push_back(std::move(t));
    }
  }
  g.validate();
  return g;
}

SceneSample generate_sample(const SceneGrammar& g, std::uint64_t seed,
                            const std::string& image_id) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, g.noise_sigma);
  auto pick = [&](int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  };

  constexpr int kMaxSubRoles = 5;
  constexpr std::size_t kMaxCaptionTokens = 18;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int verb = pick(static_cast<int>(g.verbs.size()));
    const auto& v = g.verbs[static_cast<std::size_t>(verb)];

    // Role subset and counts.
    Vsr vsr;
    vsr.verb = v.name;
    for (RoleId r : v.roles) {
      if (unit(rng) >= g.role_keep_prob) continue;
      const int pool = static_cast<int>(v.role_classes.at(r).size());
      int count = 1;
      while (count < std::min(g.max_count, pool) && unit(rng) < g.extra_count_prob) {
        ++count;
      }
      vsr.roles.push_back({r, count});
    }
    if (vsr.roles.empty() || vsr.total_count() > kMaxSubRoles) continue;

    // Template by weight.
    const auto tids = g.templates_of(verb);
    double total = 0.0;
    for (int t : tids) total += g.templates[static_cast<std::size_t>(t)].weight;
    double u = unit(rng) * total;
    int tid = tids.back();
    for (int t : tids) {
      u -= g.templates[static_cast<std::size_t>(t)].weight;
      if (u < 0) {
        tid = t;
        break;
      }
    }
    const auto& tmpl = g.templates[static_cast<std::size_t>(tid)];

    SceneSample s;
    s.image_id = image_id;
    s.d_v = g.d_v;
    s.image_width = g.image_width;
    s.image_height = g.image_height;
    s.gt_vsr = vsr;

    // Entities: each sub-role gets a distinct class from its role's pool.
    struct Entity {
      SubRole sub;
      int cls;
      Box box;
      bool distractor;
    };
    std::vector<Entity> entities;
    std::set<int> used;
    std::set<RoleId> kinds;
    for (const auto& rc : vsr.roles) {
      kinds.insert(rc.role);
      auto pool = v.role_classes.at(rc.role);
      std::shuffle(pool.begin(), pool.end(), rng);
      std::vector<Box> boxes;
      for (int k = 0; k < rc.count; ++k) {
        Box b = random_box(rng, g.image_width, g.image_height);
        for (int tries = 0; tries < 100; ++tries) {
          bool ok = true;
          for (const auto& o : boxes) {
            if (std::abs(o.center_x() - b.center_x()) < 0.05 * g.image_width) ok = false;
          }
          if (ok) break;
          b = random_box(rng, g.image_width, g.image_height);
        }
        boxes.push_back(b);
      }
      // Sub-role index follows left-to-right mention order.
      std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
        return a.center_x() < b.center_x();
      });
      for (int k = 0; k < rc.count; ++k) {
        entities.push_back({SubRole{rc.role, k + 1}, pool[static_cast<std::size_t>(k)],
                            boxes[static_cast<std::size_t>(k)], false});
        used.insert(pool[static_cast<std::size_t>(k)]);
      }
    }
    std::vector<int> distractor_pool;
    for (std::size_t c = 0; c < g.classes.size(); ++c) {
      const auto& nc = g.classes[c];
      if (used.count(static_cast<int>(c))) continue;
      if (nc.role_kind != -1 && kinds.count(nc.role_kind)) continue;
      distractor_pool.push_back(static_cast<int>(c));
    }
    std::shuffle(distractor_pool.begin(), distractor_pool.end(), rng);
    const int n_distract = std::min<int>(
        static_cast<int>(distractor_pool.size()),
        std::uniform_int_distribution<int>(g.min_distractors, g.max_distractors)(rng));
    for (int k = 0; k < n_distract; ++k) {
      entities.push_back({SubRole{}, distractor_pool[static_cast<std::size_t>(k)],
                          random_box(rng, g.image_width, g.image_height), true});
    }

    // Proposals, grouped into sets (one set per entity).
    std::vector<int> set_order(entities.size());
    std::iota(set_order.begin(), set_order.end(), 0);
    std::shuffle(set_order.begin(), set_order.end(), rng);
    s.sets.resize(entities.size());
    for (std::size_t slot = 0; slot < set_order.size(); ++slot) {
      const auto& e = entities[static_cast<std::size_t>(set_order[slot])];
      const int members = g.grouping == Grouping::kSingleton
                              ? 1
                              : std::uniform_int_distribution<int>(1, g.max_set_size)(rng);
      for (int m = 0; m < members; ++m) {
        Proposal p;
        p.class_id = e.cls;
        p.box = m == 0 ? e.box : jitter_box(e.box, rng, g.image_width, g.image_height);
        p.feature = g.classes[static_cast<std::size_t>(e.cls)].prototype;
        if (!e.distractor) p.feature += v.activity;
        for (int i = 0; i < g.d_v; ++i) p.feature(i) += noise(rng);
        s.sets[slot].members.push_back(static_cast<int>(s.proposals.size()));
        s.proposals.push_back(std::move(p));
      }
      if (!e.distractor) s.gt_grounding[e.sub] = static_cast<int>(slot);
    }
    s.recompute_pooled();

    // Structure from the template order, caption from the structure.
    std::vector<int> cls_per_sub;
    for (RoleId r : tmpl.order) {
      if (r == kVerbRole) {
        s.gt_structure.subroles.push_back(SubRole::verb());
        continue;
      }
      const int n = vsr.count_of(r);
      for (int k = 1; k <= n; ++k) {
        s.gt_structure.subroles.push_back(SubRole{r, k});
        for (const auto& e : entities) {
          if (!e.distractor && e.sub == SubRole{r, k}) cls_per_sub.push_back(e.cls);
        }
      }
    }
    auto rendered = g.render(verb, s.gt_structure, cls_per_sub);
    if (rendered.tokens.size() > kMaxCaptionTokens) continue;
    s.gt_caption = std::move(rendered.tokens);
    s.gt_gates = std::move(rendered.gates);
    return s;
  }
  throw Error(ErrorCode::kGrammarInconsistent,
              "grammar cannot produce a sample within the size limits");
}

std::vector<SceneSample> generate_dataset(const SceneGrammar& grammar, int n,
                                          std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "dataset size must be >= 1");
  grammar.validate();
  std::vector<SceneSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const std::uint64_t sample_seed =
        splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k) + 1));
    char id[64];
    std::snprintf(id, sizeof id, "img-%llu-%06d",
                  static_cast<unsigned long long>(seed), k);
    out.push_back(generate_sample(grammar, sample_seed, id));
  }
  return out;
}

SceneSample fill_missing_regions(const SceneSample& sample) {
  if (sample.sets.empty()) {
    throw Error(ErrorCode::kNoProposals, "sample " + sample.image_id);
  }
  SceneSample out = sample;
  const bool scored = sample.set_scores.size() == sample.sets.size();
  int best = 0;
  for (int j = 1; j < static_cast<int>(sample.sets.size()); ++j) {
    const double a = scored ? sample.set_scores[static_cast<std::size_t>(j)]
                            : sample.set_area(j);
    const double b = scored ? sample.set_scores[static_cast<std::size_t>(best)]
                            : sample.set_area(best);
    if (a > b) best = j;
  }
  for (const auto& sub : sample.gt_structure.subroles) {
    if (sub.is_verb() || out.gt_grounding.count(sub)) continue;
    out.gt_grounding[sub] = best;
    out.filled.push_back(sub);
  }
  return out;
}

std::vector<int> chunk_index_from_gates(const std::vector<int>& gates, int k) {
  std::vector<int> out;
  out.reserve(gates.size());
  int shifted = 0;
  for (int g : gates) {
    out.push_back(std::min(shifted, k - 1));
    shifted += g;
  }
  return out;
}

}  // namespace vsrcap
