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

#include "vsrcap/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "vsrcap/checkpoint.hpp"
#include "vsrcap/error.hpp"
#include "vsrcap/merge.hpp"
#include "vsrcap/plot.hpp"

namespace vsrcap {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplits[] = {"train", "val", "test"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const Tokens& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? " " : "") + t[i];
  return out;
}

std::string structure_text(const SemanticStructure& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + subrole_key(s.subroles[i]);
  return out;
}

std::vector<RoleId> role_sequence(const SemanticStructure& s) {
  std::vector<RoleId> out;
  for (const auto& sub : s.subroles) out.push_back(sub.role);
  return out;
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path);
  os << text;
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

void emit_config(const RunConfig& config, const std::string& command, std::ostream& log) {
  const std::string text = config.serialize();
  log << "# " << command << " effective config\n" << text;
  write_text(run_paths(config).root + "/config." + command + ".txt", text);
}

std::vector<CaptionExample> caption_examples(const std::vector<SceneSample>& samples,
                                             const Models& m) {
  std::vector<CaptionExample> out;
  for (const auto& s : samples) out.push_back(make_caption_example(s, m.vocab, m.grammar));
  return out;
}

void write_curve(const std::string& path, const std::vector<EpochLog>& logs) {
  std::string text = "epoch\ttrain_loss\tval_metric\tlr\n";
  for (const auto& l : logs) {
    text += std::to_string(l.epoch) + "\t" + fmt(l.train_loss) + "\t" + fmt(l.val_metric) +
            "\t" + fmt(l.lr) + "\n";
  }
  write_text(path, text);
}

void write_curve(const std::string& path, const std::vector<CaptionerEpochLog>& logs) {
  std::string text = "epoch\ttrain_loss\tval_metric\tlr\ttrain_reward\n";
  for (const auto& l : logs) {
    text += std::to_string(l.epoch) + "\t" + fmt(l.train_loss) + "\t" + fmt(l.val_cider) +
            "\t" + fmt(l.lr) + "\t" + fmt(l.train_reward) + "\n";
  }
  write_text(path, text);
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingPrerequisite, what + " needs " + path);
  }
}

// Class of each non-verb sub-role's grounded set, in structure order.
std::vector<int> subrole_classes(const SceneSample& s, const SemanticStructure& structure) {
  std::vector<int> out;
  for (const auto& sub : structure.subroles) {
    if (sub.is_verb()) continue;
    const int set = s.gt_grounding.at(sub);
    out.push_back(s.proposals[static_cast<std::size_t>(
                                  s.sets[static_cast<std::size_t>(set)].members.front())]
                      .class_id);
  }
  return out;
}

// The ground-truth caption, plus in multi-reference mode the renderings of
// the same VSR through every other template of its verb.
std::vector<Tokens> references_for(const SceneSample& s, const SceneGrammar& g, bool multi) {
  std::vector<Tokens> refs{s.gt_caption};
  if (!multi) return refs;
  const SceneSample f = fill_missing_regions(s);
  const int verb = g.verb_index(f.gt_vsr.verb);
  for (int t : g.templates_of(verb)) {
    SemanticStructure st;
    for (RoleId r : g.templates[static_cast<std::size_t>(t)].order) {
      if (r == kVerbRole) {
        st.subroles.push_back(SubRole::verb());
        continue;
      }
      for (int k = 1; k <= f.gt_vsr.count_of(r); ++k) st.subroles.push_back(SubRole{r, k});
    }
    if (st == f.gt_structure) continue;
    refs.push_back(g.render(verb, st, subrole_classes(f, st)).tokens);
  }
  return refs;
}

Vsr sample_role_subset(const SceneGrammar& g, const std::string& verb, std::mt19937_64& rng) {
  const VerbLexicon lex = g.lexicon();
  const auto& allowed = lex.allowed_roles(verb);
  std::vector<RoleId> pool(allowed.begin(), allowed.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  const int top = std::min<int>(3, static_cast<int>(pool.size()));
  const int n = std::uniform_int_distribution<int>(1, top)(rng);
  std::vector<RoleId> chosen(pool.begin(), pool.begin() + n);
  std::sort(chosen.begin(), chosen.end());
  Vsr v;
  v.verb = verb;
  for (RoleId r : chosen) v.roles.push_back({r, 1});
  return v;
}

}  // namespace

std::string RunPaths::data(const std::string& split) const {
  return root + "/data/" + split + ".jsonl";
}
std::string RunPaths::checkpoint(const std::string& name) const {
  return root + "/ckpt/" + name + ".ckpt";
}
std::string RunPaths::curve(const std::string& name) const {
  return root + "/curves/" + name + ".tsv";
}
std::string RunPaths::report() const { return root + "/eval/report.txt"; }
std::string RunPaths::samples() const { return root + "/eval/samples.tsv"; }
std::string RunPaths::plots() const { return root + "/plots"; }

RunPaths run_paths(const RunConfig& config) { return RunPaths{config.out}; }

std::uint64_t split_seed(std::uint64_t seed, const std::string& split) {
  return fnv1a64(std::to_string(seed) + ":" + split);
}

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::kData: return "data";
    case Stage::kGsrl: return "gsrl";
    case Stage::kSsp: return "ssp";
    case Stage::kCaptionerXe: return "captioner-xe";
    case Stage::kCaptionerRl: return "captioner-rl";
  }
  return "unknown";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::kGsrl, Stage::kSsp, Stage::kCaptionerXe, Stage::kCaptionerRl}) {
    if (stage_name(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidInput,
              "unknown stage '" + name + "' (gsrl|ssp|captioner-xe|captioner-rl)");
}

Dataset load_split(const RunConfig& config, const std::string& split) {
  const std::string path = run_paths(config).data(split);
  require_file(path, "split " + split);
  Dataset d = read_dataset(path);
  const std::string hash = config.grammar().hash();
  if (d.meta.grammar_hash != hash) {
    throw Error(ErrorCode::kFingerprintMismatch,
                path + " has grammar hash " + d.meta.grammar_hash + ", config gives " + hash);
  }
  if (d.meta.seed != split_seed(config.seed, split)) {
    throw Error(ErrorCode::kFingerprintMismatch, path + " was generated under another seed");
  }
  return d;
}

Models make_models(const RunConfig& config) {
  Models m;
  m.grammar = config.grammar();
  m.vocab = m.grammar.vocabulary();
  const auto verbs = m.grammar.lexicon().verbs();
  m.gsrl = std::make_unique<GsrlModel>(config.gsrl_config(), verbs, config.seed + 1);
  m.s_level = std::make_unique<SLevelModel>(config.s_level_config(), verbs, config.seed + 2);
  m.r_level = std::make_unique<RLevelModel>(
      config.r_level_config(static_cast<int>(m.grammar.classes.size())), config.seed + 3);
  m.captioner =
      std::make_unique<Captioner>(config.captioner_config(m.vocab.size()), config.seed + 4);
  m.captioner_stage = "untrained";
  return m;
}

Models load_models(const RunConfig& config) {
  Models m = make_models(config);
  const RunPaths p = run_paths(config);
  for (const char* name : {"gsrl", "s_level", "r_level", "captioner-xe"}) {
    require_file(p.checkpoint(name), "loading models");
  }
  load_checkpoint(m.gsrl->store(), p.checkpoint("gsrl"), config.fingerprint(Stage::kGsrl));
  load_checkpoint(m.s_level->store(), p.checkpoint("s_level"), config.fingerprint(Stage::kSsp));
  load_checkpoint(m.r_level->store(), p.checkpoint("r_level"), config.fingerprint(Stage::kSsp));
  if (fs::exists(p.checkpoint("captioner-rl"))) {
    load_checkpoint(m.captioner->store(), p.checkpoint("captioner-rl"),
                    config.fingerprint(Stage::kCaptionerRl));
    m.captioner_stage = "captioner-rl";
  } else {
    load_checkpoint(m.captioner->store(), p.checkpoint("captioner-xe"),
                    config.fingerprint(Stage::kCaptionerXe));
    m.captioner_stage = "captioner-xe";
  }
  return m;
}

Inference run_inference(const Models& models, const SceneSample& sample,
                        const std::vector<Vsr>& vsrs, const DecodeOptions& options,
                        const std::vector<std::vector<RoleId>>& orders) {
  if (vsrs.empty()) throw Error(ErrorCode::kInvalidInput, "at least one VSR is required");
  if (!orders.empty() && orders.size() != vsrs.size()) {
    throw Error(ErrorCode::kInvalidInput, "one role order per VSR");
  }
  const VerbLexicon lex = models.grammar.lexicon();
  Inference out;
  out.vsrs = vsrs;
  for (std::size_t k = 0; k < vsrs.size(); ++k) {
    require_valid_vsr(vsrs[k], lex, models.r_level->config().n_max);
    out.groundings.push_back(ground(*models.gsrl, sample, vsrs[k]));
    const auto order = orders.empty() ? models.s_level->plan_role_order(vsrs[k]) : orders[k];
    out.plans.push_back(
        plan_with_order(*models.r_level, vsrs[k], out.groundings.back(), sample, order));
  }
  if (vsrs.size() == 1) {
    out.structure = out.plans[0].structure;
    out.sets = out.plans[0].sets;
    out.verbs_per_slot = {vsrs[0].verb};
  } else {
    // Merge ids: the k-th use of a set in one structure matches the k-th use
    // in another, so roles grounded to the same set stay distinct.
    std::map<std::pair<int, int>, int> ids;
    std::vector<int> set_of_id;
    std::vector<GroundedSequence> seqs;
    for (std::size_t k = 0; k < vsrs.size(); ++k) {
      GroundedSequence g{out.plans[k].structure.subroles, out.plans[k].sets};
      std::map<int, int> uses;
      for (int& r : g.regions) {
        if (r < 0) {
          r = -static_cast<int>(k) - 1;
          continue;
        }
        const auto key = std::make_pair(r, uses[r]++);
        auto [it, fresh] = ids.emplace(key, static_cast<int>(set_of_id.size()));
        if (fresh) set_of_id.push_back(r);
        r = it->second;
      }
      seqs.push_back(std::move(g));
    }
    const GroundedSequence merged = merge_many(seqs);
    out.structure.subroles = merged.structure;
    for (int r : merged.regions) {
      if (r < 0) {
        out.verbs_per_slot.push_back(vsrs[static_cast<std::size_t>(-r - 1)].verb);
        out.sets.push_back(-1);
      } else {
        out.sets.push_back(set_of_id[static_cast<std::size_t>(r)]);
      }
    }
  }
  out.input = make_caption_input(sample, out.structure, out.sets, models.vocab, models.grammar,
                                 out.verbs_per_slot);
  out.trace = models.captioner->decode(out.input, options);
  out.caption = models.vocab.decode(out.trace.tokens);
  return out;
}

void cmd_gen_data(const RunConfig& config, std::ostream& log) {
  emit_config(config, "gen-data", log);
  const SceneGrammar g = config.grammar();
  const RunPaths p = run_paths(config);
  const int sizes[] = {config.n_train, config.n_val, config.n_test};
  for (int k = 0; k < 3; ++k) {
    DatasetMeta meta;
    meta.grammar_hash = g.hash();
    meta.seed = split_seed(config.seed, kSplits[k]);
    meta.n = sizes[k];
    meta.split = kSplits[k];
    meta.image_width = g.image_width;
    meta.image_height = g.image_height;
    const auto samples = generate_dataset(g, sizes[k], meta.seed);
    ensure_parent(p.data(kSplits[k]));
    write_dataset(p.data(kSplits[k]), meta, samples);
    log << "wrote " << p.data(kSplits[k]) << " (" << samples.size() << " samples)\n";
  }
}

void cmd_train(Stage stage, const RunConfig& config, std::ostream& log) {
  if (stage == Stage::kData) throw Error(ErrorCode::kInvalidInput, "data is not a training stage");
  const RunPaths p = run_paths(config);
  const std::string name = stage_name(stage);
  // Prerequisites and fingerprints are checked before any step is taken.
  Models m = make_models(config);
  if (stage == Stage::kCaptionerRl) {
    require_file(p.checkpoint("captioner-xe"), "train captioner-rl");
    load_checkpoint(m.captioner->store(), p.checkpoint("captioner-xe"),
                    config.fingerprint(Stage::kCaptionerXe));
  }
  const Dataset train = load_split(config, "train");
  const Dataset val = load_split(config, "val");
  emit_config(config, "train-" + name, log);
  log << "stage " << name << " fingerprint " << config.fingerprint(stage) << "\n";

  switch (stage) {
    case Stage::kGsrl: {
      const auto logs = train_gsrl(*m.gsrl, train.samples, val.samples, config.gsrl_options());
      for (const auto& l : logs) {
        log << "epoch " << l.epoch << " loss " << fmt(l.train_loss) << " val_top1 "
            << fmt(l.val_metric) << "\n";
      }
      write_curve(p.curve("gsrl"), logs);
      ensure_parent(p.checkpoint("gsrl"));
      save_checkpoint(m.gsrl->store(), p.checkpoint("gsrl"), config.fingerprint(stage));
      break;
    }
    case Stage::kSsp: {
      const auto s_logs =
          train_s_level(*m.s_level, train.samples, val.samples, config.s_level_options());
      const auto r_logs =
          train_r_level(*m.r_level, train.samples, val.samples, config.r_level_options());
      for (const auto& l : s_logs) {
        log << "s-level epoch " << l.epoch << " loss " << fmt(l.train_loss) << " val_order "
            << fmt(l.val_metric) << "\n";
      }
      for (const auto& l : r_logs) {
        log << "r-level epoch " << l.epoch << " loss " << fmt(l.train_loss) << " val_rank "
            << fmt(l.val_metric) << "\n";
      }
      write_curve(p.curve("s_level"), s_logs);
      write_curve(p.curve("r_level"), r_logs);
      ensure_parent(p.checkpoint("s_level"));
      save_checkpoint(m.s_level->store(), p.checkpoint("s_level"), config.fingerprint(stage));
      save_checkpoint(m.r_level->store(), p.checkpoint("r_level"), config.fingerprint(stage));
      break;
    }
    case Stage::kCaptionerXe: {
      const auto tr = caption_examples(train.samples, m);
      const auto va = caption_examples(val.samples, m);
      const auto logs = train_captioner_xe(*m.captioner, tr, va, m.vocab, config.xe_options());
      for (const auto& l : logs) {
        log << "epoch " << l.epoch << " loss " << fmt(l.train_loss) << " val_cider "
            << fmt(l.val_cider) << "\n";
      }
      write_curve(p.curve("captioner-xe"), logs);
      ensure_parent(p.checkpoint(name));
      save_checkpoint(m.captioner->store(), p.checkpoint(name), config.fingerprint(stage));
      break;
    }
    case Stage::kCaptionerRl: {
      const auto tr = caption_examples(train.samples, m);
      const auto va = caption_examples(val.samples, m);
      std::vector<std::vector<Tokens>> refs;
      for (const auto& ex : tr) refs.push_back({ex.reference});
      const CorpusStats stats(refs);
      const auto opts = config.rl_options();
      const double before =
          mean_sample_reward(*m.captioner, tr, m.vocab, stats, opts.max_len, opts.seed);
      const auto logs = train_captioner_rl(*m.captioner, tr, va, m.vocab, opts);
      const double after =
          mean_sample_reward(*m.captioner, tr, m.vocab, stats, opts.max_len, opts.seed);
      for (const auto& l : logs) {
        log << "epoch " << l.epoch << " reward " << fmt(l.train_reward) << " val_cider "
            << fmt(l.val_cider) << "\n";
      }
      log << "mean sampled reward before " << fmt(before) << " after " << fmt(after) << "\n";
      write_curve(p.curve("captioner-rl"), logs);
      save_checkpoint(m.captioner->store(), p.checkpoint(name), config.fingerprint(stage));
      break;
    }
    case Stage::kData: break;
  }
  log << "saved stage " << name << "\n";
}

std::vector<std::string> report_keys() {
  return {"n_test",          "bleu4",           "cider_d",
          "r_v",             "r_sr1",           "r_sr2",
          "r_sr1_distinct",  "parse_rate",      "oracle_r_v",
          "oracle_r_sr1",    "oracle_r_sr2",    "oracle_cider_d",
          "gsrl_top1",       "s_level_order",   "r_level_rank",
          "div1",            "div2",            "self_cider",
          "div1_identical",  "div2_identical",  "self_cider_identical",
          "self_cider_order_gap", "diverse_cider_d"};
}

EvalReport evaluate(const RunConfig& config, const Models& m,
                    const std::vector<SceneSample>& test) {
  if (test.empty()) throw Error(ErrorCode::kInvalidInput, "empty test split");
  std::vector<std::vector<Tokens>> refs;
  for (const auto& s : test) refs.push_back(references_for(s, m.grammar, config.multi_reference));
  const CorpusStats stats(refs);
  const DecodeOptions beam{DecodeMode::kBeam, config.beam, config.max_len, false, 0};
  DecodeOptions oracle = beam;
  oracle.oracle_verb = true;

  EvalReport rep;
  auto& mt = rep.metrics;
  for (const auto& k : report_keys()) mt[k] = 0.0;
  std::vector<Tokens> caps;
  rep.sample_rows.push_back(
      "image_id\tvsr\tstructure\tcaption\treference\tcider_d\tr_v\tr_sr1\tr_sr2\t"
      "oracle_caption\tdiv1\tdiv2\tself_cider\tset_cider_d");
  for (std::size_t i = 0; i < test.size(); ++i) {
    const SceneSample& s = test[i];
    const Inference inf = run_inference(m, s, {s.gt_vsr}, beam);
    const Tokens& cap = inf.caption;
    caps.push_back(cap);
    const double c = cider_d(cap, refs[i], stats);
    const auto rr = role_recall(cap, s.gt_vsr, s.gt_structure, m.grammar);
    const auto rd = role_recall(cap, s.gt_vsr, s.gt_structure, m.grammar, true);
    const auto parsed = m.grammar.try_inverse_parse(cap);
    const Inference orc = run_inference(m, s, {s.gt_vsr}, oracle);
    const auto ro = role_recall(orc.caption, s.gt_vsr, s.gt_structure, m.grammar);
    mt["cider_d"] += c;
    mt["r_v"] += rr.r_v;
    mt["r_sr1"] += rr.r_sr1;
    mt["r_sr2"] += rr.r_sr2;
    mt["r_sr1_distinct"] += rd.r_sr1;
    mt["parse_rate"] += parsed && parsed->roles == role_sequence(inf.structure) ? 1.0 : 0.0;
    mt["oracle_r_v"] += ro.r_v;
    mt["oracle_r_sr1"] += ro.r_sr1;
    mt["oracle_r_sr2"] += ro.r_sr2;
    mt["oracle_cider_d"] += cider_d(orc.caption, refs[i], stats);

    // Diversity: the two best S-level structures and two sampled role subsets.
    std::vector<Tokens> set;
    for (const auto& b : m.s_level->plan_role_order_beam(s.gt_vsr, 2)) {
      set.push_back(run_inference(m, s, {s.gt_vsr}, beam, {b.order}).caption);
    }
    std::mt19937_64 rng(split_seed(config.seed, "diversity:" + s.image_id));
    for (int k = 0; k < 2; ++k) {
      const Vsr sub = sample_role_subset(m.grammar, s.gt_vsr.verb, rng);
      set.push_back(run_inference(m, s, {sub}, beam).caption);
    }
    const std::vector<Tokens> same(set.size(), set.front());
    std::vector<Tokens> reversed(set.rbegin(), set.rend());
    const double d1 = div_n(set, 1), d2 = div_n(set, 2);
    const double sc = self_cider(set, stats);
    double set_cider = 0.0;
    for (const auto& t : set) set_cider += cider_d(t, refs[i], stats);
    set_cider /= static_cast<double>(set.size());
    mt["div1"] += d1;
    mt["div2"] += d2;
    mt["self_cider"] += sc;
    mt["div1_identical"] += div_n(same, 1);
    mt["div2_identical"] += div_n(same, 2);
    mt["self_cider_identical"] += self_cider(same, stats);
    mt["self_cider_order_gap"] =
        std::max(mt["self_cider_order_gap"], std::abs(sc - self_cider(reversed, stats)));
    mt["diverse_cider_d"] += set_cider;

    rep.sample_rows.push_back(s.image_id + "\t" + format_vsr(s.gt_vsr) + "\t" +
                              structure_text(inf.structure) + "\t" + join(cap) + "\t" +
                              join(s.gt_caption) + "\t" + fmt(c) + "\t" + fmt(rr.r_v) + "\t" +
                              fmt(rr.r_sr1) + "\t" + fmt(rr.r_sr2) + "\t" + join(orc.caption) +
                              "\t" + fmt(d1) + "\t" + fmt(d2) + "\t" + fmt(sc) + "\t" +
                              fmt(set_cider));
  }
  const double n = static_cast<double>(test.size());
  for (auto& [k, v] : mt) {
    if (k != "self_cider_order_gap") v /= n;
  }
  mt["n_test"] = n;
  mt["bleu4"] = corpus_bleu4(caps, refs);
  mt["gsrl_top1"] = gsrl_top1_accuracy(*m.gsrl, test);
  mt["s_level_order"] = s_level_accuracy(*m.s_level, test);
  mt["r_level_rank"] = r_level_accuracy(*m.r_level, test);

  rep.header = {
      std::string("vsrcap eval report v") + kReportVersion,
      "captioner_stage = " + m.captioner_stage,
      "decode = beam " + std::to_string(config.beam) + ", max_len " +
          std::to_string(config.max_len),
      "cider_idf = test split (" + std::to_string(test.size()) + " images, " +
          (config.multi_reference ? "multi" : "single") + " reference)",
      "diversity = 2 beam structures + 2 sampled role subsets per image",
  };
  return rep;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  for (const auto& h : report.header) out += "# " + h + "\n";
  for (const auto& k : report_keys()) {
    auto it = report.metrics.find(k);
    if (it != report.metrics.end()) out += k + " = " + fmt(it->second) + "\n";
  }
  return out;
}

std::map<std::string, double> parse_report(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw Error(ErrorCode::kParseError, "report line: " + line);
    out[line.substr(0, eq)] = std::stod(line.substr(eq + 3));
  }
  return out;
}

EvalReport cmd_eval(const RunConfig& config, std::ostream& log) {
  const Models m = load_models(config);
  const Dataset test = load_split(config, "test");
  emit_config(config, "eval", log);
  EvalReport rep = evaluate(config, m, test.samples);
  const RunPaths p = run_paths(config);
  write_text(p.report(), format_report(rep));
  std::string rows;
  for (const auto& r : rep.sample_rows) rows += r + "\n";
  write_text(p.samples(), rows);
  log << format_report(rep);
  log << "wrote " << p.report() << " and " << p.samples() << "\n";
  return rep;
}

std::string cmd_generate(const RunConfig& config, const std::string& data_path,
                       const std::string& image_id, const std::vector<std::string>& vsr_texts,
                       const DecodeOptions& options) {
  if (vsr_texts.empty()) throw Error(ErrorCode::kInvalidInput, "at least one --vsr is required");
  std::vector<Vsr> vsrs;
  for (const auto& t : vsr_texts) vsrs.push_back(parse_vsr(t));
  const Models m = load_models(config);
  const Dataset d =
      data_path.empty() ? load_split(config, "test") : read_dataset(data_path);
  if (d.samples.empty()) throw Error(ErrorCode::kInvalidInput, "dataset has no samples");
  const SceneSample* sample = &d.samples.front();
  if (!image_id.empty()) {
    sample = nullptr;
    for (const auto& s : d.samples) {
      if (s.image_id == image_id) sample = &s;
    }
    if (!sample) throw Error(ErrorCode::kInvalidInput, "no sample with image id " + image_id);
  }
  return inference_to_json(run_inference(m, *sample, vsrs, options), *sample, m.vocab);
}

std::string inference_to_json(const Inference& r, const SceneSample& sample,
                              const Vocabulary& vocab) {
  nlohmann::json j;
  j["image_id"] = sample.image_id;
  for (const auto& v : r.vsrs) j["vsr"].push_back(format_vsr(v));
  j["caption"] = join(r.caption);
  j["tokens"] = vocab.decode(r.trace.tokens);
  for (std::size_t k = 0; k < r.structure.size(); ++k) {
    nlohmann::json e;
    e["subrole"] = subrole_key(r.structure.subroles[k]);
    e["set"] = r.sets[k];
    if (r.sets[k] >= 0) {
      e["proposals"] = sample.sets[static_cast<std::size_t>(r.sets[k])].members;
    }
    j["structure"].push_back(e);
  }
  j["gates"] = r.trace.gates;
  j["forced"] = r.trace.forced;
  j["subrole_trace"] = r.trace.subrole;
  j["ended"] = r.trace.ended;
  j["score"] = r.trace.score;
  return j.dump();
}

void cmd_plot(const RunConfig& config, std::ostream& log) {
  emit_config(config, "plot", log);
  const RunPaths p = run_paths(config);
  fs::create_directories(p.plots());
  std::vector<Series> loss;
  for (const char* name : {"gsrl", "s_level", "r_level", "captioner-xe", "captioner-rl"}) {
    if (!fs::exists(p.curve(name))) continue;
    const Table t = read_tsv(p.curve(name));
    loss.push_back(Series{name, t.column("epoch"), t.column("train_loss")});
  }
  if (loss.empty()) throw Error(ErrorCode::kMissingPrerequisite, "no training curves under " + p.root);
  write_text(p.plots() + "/loss_curves.svg", line_plot_svg("training loss", "epoch", "loss", loss));
  log << "wrote " << p.plots() << "/loss_curves.svg\n";

  require_file(p.report(), "plot");
  std::ifstream is(p.report());
  std::stringstream ss;
  ss << is.rdbuf();
  const auto metrics = parse_report(ss.str());
  std::vector<std::pair<std::string, double>> bars;
  for (const char* k : {"r_v", "r_sr1", "r_sr2", "oracle_r_v", "oracle_r_sr1", "oracle_r_sr2"}) {
    bars.emplace_back(k, metrics.at(k));
  }
  write_text(p.plots() + "/recall_bars.svg", bar_chart_svg("controllability recall", bars));
  log << "wrote " << p.plots() << "/recall_bars.svg\n";

  const Table samples = read_tsv(p.samples());
  write_text(p.plots() + "/diversity_accuracy.svg",
             scatter_svg("diversity vs accuracy", "Div-1", "CIDEr-D",
                         samples.column("div1"), samples.column("set_cider_d")));
  log << "wrote " << p.plots() << "/diversity_accuracy.svg\n";
}

}  // namespace vsrcap
