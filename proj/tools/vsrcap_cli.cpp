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

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "vsrcap/config.hpp"
#include "vsrcap/error.hpp"
#include "vsrcap/pipeline.hpp"

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> sinkhorn_iters;
  std::optional<int> n_max;
  std::optional<double> xe_gate_weight;
};

vsrcap::RunConfig effective_config(const Globals& g) {
  vsrcap::RunConfig c = g.config_path.empty() ? vsrcap::RunConfig{}
                                              : vsrcap::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.out) c.out = *g.out;
  if (g.sinkhorn_iters) c.sinkhorn_iters = *g.sinkhorn_iters;
  if (g.n_max) c.n_max = *g.n_max;
  if (g.xe_gate_weight) c.xe_gate_weight = *g.xe_gate_weight;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vsrcap: verb-specific semantic role guided captioning on synthetic scenes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--out", g.out, "override the output directory");
  app.add_option("--sinkhorn-iters", g.sinkhorn_iters, "Sinkhorn iterations (default 20)");
  app.add_option("--n-max", g.n_max, "maximum sub-roles per role (default 10)");
  app.add_option("--xe-gate-weight", g.xe_gate_weight, "gate term weight in XE (default 1)");

  auto* gen = app.add_subcommand("gen-data", "write the train/val/test splits");
  auto* train = app.add_subcommand("train", "train one stage");
  std::string stage;
  train->add_option("stage", stage, "gsrl | ssp | captioner-xe | captioner-rl")->required();
  auto* eval = app.add_subcommand("eval", "evaluate on the test split");
  auto* plot = app.add_subcommand("plot", "write SVG figures from curves and the report");

  auto* generate = app.add_subcommand("generate", "caption one image under one or more VSRs");
  std::vector<std::string> vsrs;
  std::string image_id, data_path, mode = "beam";
  int beam = -1, max_len = -1;
  generate->add_option("--vsr", vsrs, "\"verb role:count ...\", repeatable")->required();
  generate->add_option("--image-id", image_id, "sample to caption (first sample when omitted)");
  generate->add_option("--data", data_path, "dataset file (test split when omitted)");
  generate->add_option("--mode", mode, "greedy | beam | sample")
      ->check(CLI::IsMember({"greedy", "beam", "sample"}));
  generate->add_option("--beam", beam, "beam size (config default 5)");
  generate->add_option("--max-len", max_len, "maximum caption length (config default 20)");

  CLI11_PARSE(app, argc, argv);

  try {
    const vsrcap::RunConfig config = effective_config(g);
    if (*gen) {
      vsrcap::cmd_gen_data(config, std::cerr);
    } else if (*train) {
      vsrcap::cmd_train(vsrcap::parse_stage(stage), config, std::cerr);
    } else if (*eval) {
      vsrcap::cmd_eval(config, std::cerr);
    } else if (*plot) {
      vsrcap::cmd_plot(config, std::cerr);
    } else if (*generate) {
      vsrcap::DecodeOptions opts;
      opts.mode = mode == "greedy"   ? vsrcap::DecodeMode::kGreedy
                  : mode == "sample" ? vsrcap::DecodeMode::kSample
                                     : vsrcap::DecodeMode::kBeam;
      opts.beam = beam > 0 ? beam : config.beam;
      opts.max_len = max_len > 0 ? max_len : config.max_len;
      opts.seed = config.seed;
      std::cerr << "# generate effective config\n" << config.serialize();
      std::cout << vsrcap::cmd_generate(config, data_path, image_id, vsrs, opts) << "\n";
    }
  } catch (const vsrcap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
