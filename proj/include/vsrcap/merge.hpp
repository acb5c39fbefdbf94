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

// Merging the grounded semantic structures of several VSRs that describe
// one image into a single sub-role sequence.

#ifndef VSRCAP_MERGE_HPP_
#define VSRCAP_MERGE_HPP_

#include <vector>

#include "vsrcap/vsr.hpp"

namespace vsrcap {

// Index-aligned sub-roles and region-set ids. Two entries refer to the same
// regions iff their ids are equal; verb entries should carry ids no other
// entry uses (negative ids by convention).
struct GroundedSequence {
  std::vector<SubRole> structure;
  std::vector<int> regions;
  bool operator==(const GroundedSequence&) const = default;
};

// Throws kInvalidInput (misaligned input or a repeated id inside one
// sequence) and kNoSharedRegions.
GroundedSequence merge(const GroundedSequence& a, const GroundedSequence& b);
// Left fold of merge in the given (verb-rank) order.
GroundedSequence merge_many(const std::vector<GroundedSequence>& inputs);

}  // namespace vsrcap

#endif  // VSRCAP_MERGE_HPP_
