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

#include "vsrcap/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vsrcap/error.hpp"

namespace vsrcap {

using nlohmann::json;

namespace {

json meta_to_json(const DatasetMeta& m) {
  json j;
  j["format_version"] = m.format_version;
  j["grammar_hash"] = m.grammar_hash;
  j["seed"] = m.seed;
  j["n"] = m.n;
  j["split"] = m.split;
  j["image_size"] = {m.image_width, m.image_height};
  return json{{"meta", j}};
}

DatasetMeta meta_from_json(const json& root) {
  if (!root.contains("meta")) {
    throw Error(ErrorCode::kParseError, "dataset lacks a meta header line");
  }
  const json& j = root.at("meta");
  DatasetMeta m;
  m.format_version = j.at("format_version").get<std::string>();
  if (m.format_version != kDatasetFormatVersion) {
    throw Error(ErrorCode::kParseError,
                "unsupported dataset format " + m.format_version);
  }
  m.grammar_hash = j.value("grammar_hash", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.n = j.value("n", 0);
  m.split = j.value("split", "");
  if (j.contains("image_size")) {
    m.image_width = j.at("image_size").at(0).get<double>();
    m.image_height = j.at("image_size").at(1).get<double>();
  }
  return m;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidInput, what);
}

}  // namespace

std::string sample_to_json(const SceneSample& s) {
  json j;
  j["image_id"] = s.image_id;
  j["d_v"] = s.d_v;
  json props = json::array();
  for (const auto& p : s.proposals) {
    std::vector<double> f(p.feature.data(), p.feature.data() + p.feature.size());
    props.push_back({{"feature", f},
                     {"class_id", p.class_id},
                     {"box", {p.box.x_min, p.box.y_min, p.box.x_max, p.box.y_max}}});
  }
  j["proposals"] = std::move(props);
  json sets = json::array();
  for (const auto& set : s.sets) sets.push_back(set.members);
  j["sets"] = std::move(sets);
  j["vsr"] = format_vsr(s.gt_vsr);
  json structure = json::array();
  for (const auto& sub : s.gt_structure.subroles) {
    structure.push_back({std::string(role_name(sub.role)), sub.index});
  }
  j["structure"] = std::move(structure);
  json grounding = json::object();
  for (const auto& [sub, set] : s.gt_grounding) grounding[subrole_key(sub)] = set;
  j["grounding"] = std::move(grounding);
  j["caption"] = s.gt_caption;
  j["gates"] = s.gt_gates;
  if (!s.set_scores.empty()) j["set_scores"] = s.set_scores;
  return j.dump();
}

SceneSample sample_from_json(const std::string& line, double image_width,
                             double image_height) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  SceneSample s;
  try {
    s.image_id = j.at("image_id").get<std::string>();
    s.d_v = j.at("d_v").get<int>();
    s.image_width = image_width;
    s.image_height = image_height;
    for (const auto& p : j.at("proposals")) {
      Proposal prop;
      const auto f = p.at("feature").get<std::vector<double>>();
      require(static_cast<int>(f.size()) == s.d_v,
              s.image_id + ": feature dimension differs from d_v");
      prop.feature = Eigen::Map<const Eigen::VectorXd>(f.data(),
                                                       static_cast<Eigen::Index>(f.size()));
      require(prop.feature.allFinite(), s.image_id + ": non-finite feature");
      prop.class_id = p.at("class_id").get<int>();
      const auto b = p.at("box").get<std::vector<double>>();
      require(b.size() == 4, s.image_id + ": box needs 4 values");
      prop.box = Box{b[0], b[1], b[2], b[3]};
      require(0 <= b[0] && b[0] < b[2] && b[2] <= image_width && 0 <= b[1] &&
                  b[1] < b[3] && b[3] <= image_height,
              s.image_id + ": degenerate or out-of-image box");
      s.proposals.push_back(std::move(prop));
    }
    std::vector<int> owner(s.proposals.size(), -1);
    for (const auto& set : j.at("sets")) {
      ProposalSet ps;
      ps.members = set.get<std::vector<int>>();
      require(!ps.members.empty(), s.image_id + ": empty proposal set");
      for (int m : ps.members) {
        require(m >= 0 && m < static_cast<int>(s.proposals.size()),
                s.image_id + ": set member out of range");
        require(owner[static_cast<std::size_t>(m)] == -1,
                s.image_id + ": proposal in two sets");
        owner[static_cast<std::size_t>(m)] = static_cast<int>(s.sets.size());
      }
      s.sets.push_back(std::move(ps));
    }
    for (int o : owner) require(o != -1, s.image_id + ": proposal in no set");
    s.gt_vsr = parse_vsr(j.at("vsr").get<std::string>());
    for (const auto& e : j.at("structure")) {
      const auto name = e.at(0).get<std::string>();
      auto r = role_from_name(name);
      if (!r) throw Error(ErrorCode::kParseError, "unknown role " + name);
      s.gt_structure.subroles.push_back(SubRole{*r, e.at(1).get<int>()});
    }
    for (const auto& [key, set] : j.at("grounding").items()) {
      const int idx = set.get<int>();
      require(idx >= 0 && idx < static_cast<int>(s.sets.size()),
              s.image_id + ": grounding set out of range");
      s.gt_grounding[subrole_from_key(key)] = idx;
    }
    s.gt_caption = j.at("caption").get<std::vector<std::string>>();
    s.gt_gates = j.at("gates").get<std::vector<int>>();
    require(s.gt_gates.size() == s.gt_caption.size(),
            s.image_id + ": gates and caption lengths differ");
    if (j.contains("set_scores")) {
      s.set_scores = j.at("set_scores").get<std::vector<double>>();
      require(s.set_scores.size() == s.sets.size(),
              s.image_id + ": set_scores length differs from sets");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, s.image_id + ": " + e.what());
  }
  s.recompute_pooled();
  return s;
}

std::string dataset_to_string(const DatasetMeta& meta,
                              const std::vector<SceneSample>& samples) {
  std::string out = meta_to_json(meta).dump();
  out += '\n';
  for (const auto& s : samples) {
    out += sample_to_json(s);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::string& path, const DatasetMeta& meta,
                   const std::vector<SceneSample>& samples) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path);
  os << dataset_to_string(meta, samples);
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Dataset d;
  if (!std::getline(is, line)) {
    throw Error(ErrorCode::kParseError, "empty dataset");
  }
  try {
    d.meta = meta_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("meta header: ") + e.what());
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    SceneSample s = sample_from_json(line, d.meta.image_width, d.meta.image_height);
    if (s.gt_structure.verb_count() == 0 || s.gt_vsr.verb.empty()) {
      ++d.dropped_verbless;
      continue;
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_dataset(ss.str());
}

}  // namespace vsrcap
