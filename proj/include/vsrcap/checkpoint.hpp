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

// Checkpoint files: a magic line, the config fingerprint, then one record per
// named parameter (name, rows, cols, little-endian doubles in column-major
// order). Loading refuses a checkpoint written under a different fingerprint.

#ifndef VSRCAP_CHECKPOINT_HPP_
#define VSRCAP_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "vsrcap/nn.hpp"

namespace vsrcap {

inline constexpr std::string_view kCheckpointMagic = "VSRCAP-CKPT-1";

void save_checkpoint(const nn::ParameterStore& store, const std::string& path,
                     const std::string& fingerprint);

// Throws kFingerprintMismatch, kShapeMismatch (missing/mis-shaped arrays) or
// kIoError.
void load_checkpoint(nn::ParameterStore& store, const std::string& path,
                     const std::string& fingerprint);

// Reads only the header; throws kIoError when the file is not a checkpoint.
std::string read_checkpoint_fingerprint(const std::string& path);

// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace vsrcap

#endif  // VSRCAP_CHECKPOINT_HPP_
