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

// End-to-end commands: dataset generation, the training stages, evaluation
// and caption generation from user VSRs. Every artifact lives under the
// configured output directory:
//   data/{train,val,test}.jsonl   ckpt/<stage>.ckpt   curves/<stage>.tsv
//   eval/report.txt               eval/samples.tsv    plots/*.svg

#ifndef VSRCAP_PIPELINE_HPP_
#define VSRCAP_PIPELINE_HPP_

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "vsrcap/captioner.hpp"
#include "vsrcap/config.hpp"
#include "vsrcap/dataset_io.hpp"
#include "vsrcap/gsrl.hpp"
#include "vsrcap/metrics.hpp"
#include "vsrcap/ssp.hpp"

namespace vsrcap {

inline constexpr const char* kReportVersion = "1";

struct RunPaths {
  std::string root;

  std::string data(const std::string& split) const;
  std::string checkpoint(const std::string& name) const;
  std::string curve(const std::string& name) const;
  std::string report() const;
  std::string samples() const;
  std::string plots() const;
};

RunPaths run_paths(const RunConfig& config);
std::uint64_t split_seed(std::uint64_t seed, const std::string& split);
std::string stage_name(Stage stage);
// Accepts gsrl, ssp, captioner-xe, captioner-rl.
Stage parse_stage(const std::string& name);

// Reads a split and checks its header against the config (grammar hash and
// split seed); throws kFingerprintMismatch.
Dataset load_split(const RunConfig& config, const std::string& split);

struct Models {
  SceneGrammar grammar;
  Vocabulary vocab;
  std::unique_ptr<GsrlModel> gsrl;
  std::unique_ptr<SLevelModel> s_level;
  std::unique_ptr<RLevelModel> r_level;
  std::unique_ptr<Captioner> captioner;
  std::string captioner_stage;  // captioner-rl when available, else captioner-xe
};

// Fresh models initialized from the config seeds.
Models make_models(const RunConfig& config);
// Loads every checkpoint; throws kMissingPrerequisite when one is absent.
Models load_models(const RunConfig& config);

struct Inference {
  std::vector<Vsr> vsrs;
  std::vector<GroundingResult> groundings;
  std::vector<PlanResult> plans;
  SemanticStructure structure;
  std::vector<int> sets;
  std::vector<std::string> verbs_per_slot;
  CaptionInput input;
  CaptionTrace trace;
  Tokens caption;
};

// Ground, plan, merge (more than one VSR) and decode. `orders`, when given,
// replaces the S-level role order of each VSR.
Inference run_inference(const Models& models, const SceneSample& sample,
                        const std::vector<Vsr>& vsrs, const DecodeOptions& options,
                        const std::vector<std::vector<RoleId>>& orders = {});

void cmd_gen_data(const RunConfig& config, std::ostream& log);
void cmd_train(Stage stage, const RunConfig& config, std::ostream& log);

struct EvalReport {
  std::map<std::string, double> metrics;
  std::vector<std::string> header;
  std::vector<std::string> sample_rows;
};

EvalReport evaluate(const RunConfig& config, const Models& models,
                    const std::vector<SceneSample>& test);
std::string format_report(const EvalReport& report);
std::map<std::string, double> parse_report(const std::string& text);
std::vector<std::string> report_keys();
EvalReport cmd_eval(const RunConfig& config, std::ostream& log);

// Caption for one sample of `data_path` (the test split when empty; the
// first sample when `image_id` is empty) as one JSON object.
std::string cmd_generate(const RunConfig& config, const std::string& data_path,
                       const std::string& image_id, const std::vector<std::string>& vsr_texts,
                       const DecodeOptions& options);
std::string inference_to_json(const Inference& result, const SceneSample& sample,
                              const Vocabulary& vocab);

void cmd_plot(const RunConfig& config, std::ostream& log);

}  // namespace vsrcap

#endif  // VSRCAP_PIPELINE_HPP_
