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

// Line-delimited dataset files. The first line is a meta header
//   {"meta": {"format_version": "1", "grammar_hash": ..., "seed": ..., "n": ...,
//             "split": ..., "image_size": [W, H]}}
// followed by one record per sample with the fields image_id, d_v,
// proposals[{feature, class_id, box}], sets, vsr, structure, grounding,
// caption and gates. An optional set_scores array is accepted on input.

#ifndef VSRCAP_DATASET_IO_HPP_
#define VSRCAP_DATASET_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vsrcap/scene.hpp"

namespace vsrcap {

inline constexpr const char* kDatasetFormatVersion = "1";

struct DatasetMeta {
  std::string format_version = kDatasetFormatVersion;
  std::string grammar_hash;
  std::uint64_t seed = 0;
  int n = 0;
  std::string split;
  double image_width = 640;
  double image_height = 480;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<SceneSample> samples;
  int dropped_verbless = 0;
};

std::string sample_to_json(const SceneSample& sample);
// Parses one record; throws kParseError / kInvalidInput on malformed input.
SceneSample sample_from_json(const std::string& line, double image_width,
                             double image_height);

std::string dataset_to_string(const DatasetMeta& meta,
                              const std::vector<SceneSample>& samples);
void write_dataset(const std::string& path, const DatasetMeta& meta,
                   const std::vector<SceneSample>& samples);
// Records without a verb in their structure are dropped and counted.
Dataset read_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text);

}  // namespace vsrcap

#endif  // VSRCAP_DATASET_IO_HPP_
