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

// Control-signal data model: semantic role vocabulary, verb lexicon, VSRs
// (a verb plus role/count pairs) and their expansion into sub-roles.

#ifndef VSRCAP_VSR_HPP_
#define VSRCAP_VSR_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vsrcap/error.hpp"

namespace vsrcap {

// Role ids 0..23 are the PropBank-style labels; 24 is the reserved verb
// marker, so role embeddings have kRoleVocabSize rows.
using RoleId = int;
inline constexpr int kNumRoles = 24;
inline constexpr RoleId kVerbRole = 24;
inline constexpr int kRoleVocabSize = 25;
inline constexpr int kDefaultMaxCount = 10;

std::string_view role_name(RoleId id);
// Returns nullopt for unknown names. "VERB" maps to kVerbRole.
std::optional<RoleId> role_from_name(std::string_view name);
inline bool is_semantic_role(RoleId id) { return id >= 0 && id < kNumRoles; }

class VerbLexicon {
 public:
  VerbLexicon() = default;

  // Throws kInvalidInput if the role set is empty or contains a non-role.
  void add_verb(const std::string& verb, const std::set<RoleId>& roles);

  bool contains(std::string_view verb) const;
  const std::set<RoleId>& allowed_roles(std::string_view verb) const;
  const std::vector<std::string>& verbs() const { return verbs_; }
  // Position of the verb in verbs(); -1 when unknown.
  int verb_index(std::string_view verb) const;

 private:
  std::vector<std::string> verbs_;
  std::map<std::string, std::set<RoleId>, std::less<>> allowed_;
};

struct RoleCount {
  RoleId role = 0;
  int count = 1;
  bool operator==(const RoleCount&) const = default;
};

struct Vsr {
  std::string verb;
  std::vector<RoleCount> roles;
  bool operator==(const Vsr&) const = default;

  int total_count() const;
  bool has_role(RoleId role) const;
  int count_of(RoleId role) const;
};

struct SubRole {
  RoleId role = 0;
  int index = 1;

  bool is_verb() const { return role == kVerbRole; }
  static SubRole verb() { return SubRole{kVerbRole, 1}; }
  auto operator<=>(const SubRole&) const = default;
};

// Keys are always "role:index" ("LOC:2"); display drops the index for
// single-count roles ("Arg0", "LOC-2", "VERB").
std::string subrole_key(const SubRole& s);
std::string subrole_display(const SubRole& s, int role_count);
SubRole subrole_from_key(std::string_view key);

struct SemanticStructure {
  std::vector<SubRole> subroles;

  std::size_t size() const { return subroles.size(); }
  int verb_count() const;
  // Role sequence with sub-roles collapsed ("Arg0 VERB LOC LOC" -> first
  // occurrence order of each role).
  std::vector<RoleId> role_order() const;
  bool operator==(const SemanticStructure&) const = default;
};

struct ValidationResult {
  bool ok = true;
  ErrorCode code = ErrorCode::kInvalidInput;
  std::string message;

  explicit operator bool() const { return ok; }
};

ValidationResult validate_vsr(const Vsr& vsr, const VerbLexicon& lex,
                              int n_max = kDefaultMaxCount);
// Throws Error carrying the validation code.
void require_valid_vsr(const Vsr& vsr, const VerbLexicon& lex,
                       int n_max = kDefaultMaxCount);

std::vector<SubRole> expand_sub_roles(const Vsr& vsr);

// Structure invariants: no duplicate (role, index), exactly one verb, and the
// non-verb sub-roles are exactly expand_sub_roles(vsr) as a multiset.
ValidationResult validate_structure(const SemanticStructure& s, const Vsr& vsr);

// Textual form "verb role:count role:count ...". Parse errors carry the
// character offset of the offending token.
Vsr parse_vsr(std::string_view text);
std::string format_vsr(const Vsr& vsr);

}  // namespace vsrcap

#endif  // VSRCAP_VSR_HPP_
