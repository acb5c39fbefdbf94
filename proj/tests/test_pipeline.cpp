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
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vsrcap/pipeline.hpp"

namespace vsrcap {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = -1;
  std::string output;
};

CliRun run(const std::string& args, bool with_stderr = true) {
  const std::string cmd = std::string(VSRCAP_CLI_PATH) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.output.append(buf, n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

constexpr const char* kTinyConfig =
    "n_train = 60\nn_val = 15\nn_test = 12\nd_v = 16\n"
    "gsrl_d_vb = 16\ngsrl_d_s = 16\ngsrl_d_a = 16\ngsrl_epochs = 4\n"
    "s_d_model = 16\ns_heads = 2\ns_layers = 1\ns_d_ff = 32\nr_d_c = 8\nr_hidden = 16\n"
    "ssp_epochs = 3\ncap_d_w = 16\ncap_hidden = 32\ncap_d_att = 16\nxe_epochs = 4\n"
    "rl_epochs = 1\nbeam = 2\nmax_len = 14\n";

class Pipeline : public ::testing::Test {
 protected:
  static fs::path root;
  static RunConfig config;
  static std::vector<CliRun> steps;

  static std::string cfg_flag(const fs::path& cfg) { return "--config " + quote(cfg.string()); }
  static fs::path write_config(const std::string& name, const std::string& extra) {
    const fs::path p = root / (name + ".cfg");
    std::ofstream(p) << kTinyConfig << "out = " << (root / name).string() << "\n" << extra;
    return p;
  }

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / ("vsrcap_pipeline_" + std::to_string(getpid()));
    fs::create_directories(root);
    const auto cfg = write_config("main", "");
    config = load_config(cfg.string());
    for (const char* cmd : {"gen-data", "train gsrl", "train ssp", "train captioner-xe",
                            "train captioner-rl", "eval", "plot"}) {
      steps.push_back(run(cfg_flag(cfg) + " " + cmd));
    }
  }
  static void TearDownTestSuite() { fs::remove_all(root); }
};

fs::path Pipeline::root;
RunConfig Pipeline::config;
std::vector<CliRun> Pipeline::steps;

TEST_F(Pipeline, EveryCommandSucceeds) {
  for (const auto& s : steps) EXPECT_EQ(s.status, 0) << s.output;
  // Each command echoes its effective config first.
  EXPECT_NE(steps[0].output.find("n_train = 60"), std::string::npos);
}

TEST_F(Pipeline, DataIsByteIdenticalAcrossRuns) {
  const auto cfg = write_config("again", "");
  ASSERT_EQ(run(cfg_flag(cfg) + " gen-data").status, 0);
  for (const char* split : {"train", "val", "test"}) {
    const std::string name = std::string("data/") + split + ".jsonl";
    EXPECT_EQ(slurp(root / "main" / name), slurp(root / "again" / name)) << split;
    const Dataset d = read_dataset((root / "main" / name).string());
    EXPECT_EQ(d.meta.grammar_hash, config.grammar().hash());
    EXPECT_EQ(d.meta.seed, split_seed(config.seed, split));
  }
  EXPECT_EQ(load_split(config, "train").samples.size(), 60u);
}

TEST_F(Pipeline, RlRefusesWithoutXeCheckpoint) {
  const auto cfg = write_config("no_xe", "");
  ASSERT_EQ(run(cfg_flag(cfg) + " gen-data").status, 0);
  const auto r = run(cfg_flag(cfg) + " train captioner-rl");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("MissingPrerequisite"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(root / "no_xe" / "ckpt" / "captioner-rl.ckpt"));
}

TEST_F(Pipeline, FingerprintMismatchAborts) {
  RunConfig other = config;
  other.cap_hidden = 24;
  EXPECT_THROW(load_models(other), Error);
  const auto cfg = write_config("main_changed", "out = " + (root / "main").string() + "\ncap_hidden = 24\n");
  const auto r = run(cfg_flag(cfg) + " eval");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("FingerprintMismatch"), std::string::npos) << r.output;
  const auto r2 = run(cfg_flag(write_config("main_seed", "out = " + (root / "main").string() + "\n")) +
                      " --seed 9 train gsrl");
  EXPECT_EQ(r2.status, 1);
  EXPECT_NE(r2.output.find("FingerprintMismatch"), std::string::npos) << r2.output;
}

TEST_F(Pipeline, GenerateMatchesLibrary) {
  const Dataset test = load_split(config, "test");
  const SceneSample& s = test.samples.front();
  const std::string vsr = format_vsr(s.gt_vsr);
  const auto r = run(cfg_flag(root / "main.cfg") + " generate --vsr " + quote(vsr), false);
  ASSERT_EQ(r.status, 0);
  const DecodeOptions opts{DecodeMode::kBeam, config.beam, config.max_len, false, config.seed};
  EXPECT_EQ(r.output, cmd_generate(config, "", "", {vsr}, opts) + "\n");
  const Models m = load_models(config);
  EXPECT_EQ(m.captioner_stage, "captioner-rl");
  const auto inf = run_inference(m, s, {s.gt_vsr}, opts);
  EXPECT_EQ(r.output, inference_to_json(inf, s, m.vocab) + "\n");
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["image_id"], s.image_id);
  EXPECT_EQ(j["structure"].size(), inf.structure.size());
}

TEST_F(Pipeline, TwoVsrsGiveOneMergedCaption) {
  const Dataset test = load_split(config, "test");
  for (const auto& s : test.samples) {
    if (s.gt_vsr.roles.size() < 2) continue;
    Vsr sub = s.gt_vsr;
    sub.roles.pop_back();
    const auto r = run(cfg_flag(root / "main.cfg") + " generate --image-id " + s.image_id + " --vsr " +
                           quote(format_vsr(s.gt_vsr)) + " --vsr " + quote(format_vsr(sub)),
                       false);
    ASSERT_EQ(r.status, 0) << r.output;
    const auto j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j["vsr"].size(), 2u);
    int verbs = 0;
    for (const auto& e : j["structure"]) verbs += e["set"].get<int>() < 0 ? 1 : 0;
    EXPECT_EQ(verbs, 2);
    EXPECT_EQ(j["structure"].size(), expand_sub_roles(s.gt_vsr).size() + 2);
    return;
  }
  FAIL() << "no test sample with two roles";
}

TEST_F(Pipeline, InvalidVsrReportsPosition) {
  const auto r = run(cfg_flag(root / "main.cfg") + " generate --vsr 'ride Arg0:x'");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("ParseError"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("position"), std::string::npos) << r.output;
  const auto unknown = run(cfg_flag(root / "main.cfg") + " generate --vsr 'juggle Arg0:1'");
  EXPECT_EQ(unknown.status, 1);
  EXPECT_NE(unknown.output.find("UnknownVerb"), std::string::npos) << unknown.output;
}

TEST_F(Pipeline, ReportIsCompleteAndReproducible) {
  const fs::path report = root / "main" / "eval" / "report.txt";
  const std::string first = slurp(report), first_samples = slurp(root / "main" / "eval" / "samples.tsv");
  const auto metrics = parse_report(first);
  for (const auto& k : report_keys()) EXPECT_EQ(metrics.count(k), 1u) << k;
  EXPECT_EQ(metrics.size(), report_keys().size());
  EXPECT_EQ(metrics.at("n_test"), 12.0);
  EXPECT_EQ(metrics.at("self_cider_order_gap"), 0.0);
  EXPECT_GE(metrics.at("oracle_r_v"), metrics.at("r_v"));
  for (const auto& [k, v] : metrics) EXPECT_TRUE(std::isfinite(v)) << k;
  ASSERT_EQ(run(cfg_flag(root / "main.cfg") + " eval").status, 0);
  EXPECT_EQ(slurp(report), first);
  EXPECT_EQ(slurp(root / "main" / "eval" / "samples.tsv"), first_samples);
}

TEST_F(Pipeline, ArtifactsExist) {
  for (const char* f : {"ckpt/gsrl.ckpt", "ckpt/s_level.ckpt", "ckpt/r_level.ckpt", "ckpt/captioner-xe.ckpt",
                        "ckpt/captioner-rl.ckpt", "curves/gsrl.tsv", "curves/s_level.tsv",
                        "curves/r_level.tsv", "curves/captioner-xe.tsv", "curves/captioner-rl.tsv"}) {
    EXPECT_TRUE(fs::exists(root / "main" / f)) << f;
  }
  for (const char* f : {"loss_curves.svg", "recall_bars.svg", "diversity_accuracy.svg"}) {
    const std::string svg = slurp(root / "main" / "plots" / f);
    EXPECT_NE(svg.find("<svg"), std::string::npos) << f;
    EXPECT_NE(svg.find("</svg>"), std::string::npos) << f;
  }
}

TEST(PipelineApi, StageNames) {
  for (Stage s : {Stage::kGsrl, Stage::kSsp, Stage::kCaptionerXe, Stage::kCaptionerRl}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_THROW(parse_stage("decoder"), Error);
  EXPECT_NE(split_seed(1, "train"), split_seed(1, "val"));
  EXPECT_EQ(split_seed(1, "train"), split_seed(1, "train"));
}

}  // namespace
}  // namespace vsrcap
