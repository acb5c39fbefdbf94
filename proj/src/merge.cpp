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

#include "vsrcap/merge.hpp"

#include <algorithm>
#include <iterator>
#include <set>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

void check(const GroundedSequence& s, const char* which) {
  if (s.structure.size() != s.regions.size()) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(which) + ": structure and regions differ in length");
  }
  std::set<int> seen;
  for (int r : s.regions) {
    if (!seen.insert(r).second) {
      throw Error(ErrorCode::kInvalidInput,
                  std::string(which) + ": region set " + std::to_string(r) + " repeats");
    }
  }
}

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

GroundedSequence merge(const GroundedSequence& a, const GroundedSequence& b) {
  check(a, "first structure");
  check(b, "second structure");

  std::vector<int> same;
  for (int r : a.regions) {
    if (contains(b.regions, r)) same.push_back(r);
  }
  if (same.empty()) {
    throw Error(ErrorCode::kNoSharedRegions,
                "structures share no region set; merge order is undefined");
  }

  // Shared entries of b take the order they have in a.
  std::vector<int> rb = b.regions;
  std::vector<SubRole> sb = b.structure;
  for (std::size_t i = 0, k = 0; i < rb.size(); ++i) {
    if (contains(same, rb[i])) rb[i] = same[k++];
  }

  GroundedSequence out = a;
  for (std::size_t i = 0; i < rb.size(); ++i) {
    if (contains(same, rb[i])) continue;
    int right = 0;
    bool found = false;
    for (std::size_t j = i + 1; j < rb.size(); ++j) {
      if (contains(same, rb[j])) {
        right = rb[j];
        found = true;
        break;
      }
    }
    auto pos = found ? std::find(out.regions.begin(), out.regions.end(), right)
                     : out.regions.end();
    const auto offset = std::distance(out.regions.begin(), pos);
    out.regions.insert(pos, rb[i]);
    out.structure.insert(out.structure.begin() + offset, sb[i]);
  }
  return out;
}

GroundedSequence merge_many(const std::vector<GroundedSequence>& inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kInvalidInput, "nothing to merge");
  GroundedSequence acc = inputs.front();
  check(acc, "first structure");
  for (std::size_t i = 1; i < inputs.size(); ++i) acc = merge(acc, inputs[i]);
  return acc;
}

}  // namespace vsrcap
