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

#include "vsrcap/vsr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

namespace vsrcap {

namespace {

constexpr std::array<std::string_view, kRoleVocabSize> kRoleNames = {
    "Arg0", "Arg1", "Arg2", "Arg3", "Arg4", "COM", "LOC", "DIR", "GOL",
    "MNR",  "TMP",  "EXT",  "REC",  "PRD",  "PRP", "PNC", "CAU", "DIS",
    "ADV",  "ADJ",  "MOD",  "NEG",  "LVB",  "Arg5", "VERB"};

ValidationResult fail(ErrorCode code, std::string message) {
  return ValidationResult{false, code, std::move(message)};
}

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownVerb: return "UnknownVerb";
    case ErrorCode::kRoleNotAllowedForVerb: return "RoleNotAllowedForVerb";
    case ErrorCode::kDuplicateRole: return "DuplicateRole";
    case ErrorCode::kCountOutOfRange: return "CountOutOfRange";
    case ErrorCode::kEmptyRoles: return "EmptyRoles";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kGrammarInconsistent: return "GrammarInconsistent";
    case ErrorCode::kUnparseable: return "Unparseable";
    case ErrorCode::kNoProposals: return "NoProposals";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotEnoughSets: return "NotEnoughSets";
    case ErrorCode::kTooManyRoles: return "TooManyRoles";
    case ErrorCode::kTooManySets: return "TooManySets";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kEmptyStructure: return "EmptyStructure";
    case ErrorCode::kEmptyReferences: return "EmptyReferences";
    case ErrorCode::kEmptyCaptions: return "EmptyCaptions";
    case ErrorCode::kNoSharedRegions: return "NoSharedRegions";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kMissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string_view role_name(RoleId id) {
  if (id < 0 || id >= kRoleVocabSize) return "?";
  return kRoleNames[static_cast<std::size_t>(id)];
}

// Arg5 occupies slot 23 so that exactly 24 non-verb labels exist; it is the
// rare numbered argument the role table omits, kept for file compatibility.
std::optional<RoleId> role_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == name) return static_cast<RoleId>(i);
  }
  return std::nullopt;
}

void VerbLexicon::add_verb(const std::string& verb,
                           const std::set<RoleId>& roles) {
  if (roles.empty()) {
    throw Error(ErrorCode::kInvalidInput, "verb '" + verb + "' has no roles");
  }
  for (RoleId r : roles) {
    if (!is_semantic_role(r)) {
      throw Error(ErrorCode::kInvalidInput,
                  "verb '" + verb + "' lists a non-role id");
    }
  }
  if (allowed_.find(verb) == allowed_.end()) verbs_.push_back(verb);
  allowed_[verb] = roles;
}

bool VerbLexicon::contains(std::string_view verb) const {
  return allowed_.find(verb) != allowed_.end();
}

const std::set<RoleId>& VerbLexicon::allowed_roles(std::string_view verb) const {
  auto it = allowed_.find(verb);
  if (it == allowed_.end()) {
    throw Error(ErrorCode::kUnknownVerb, std::string(verb));
  }
  return it->second;
}

int VerbLexicon::verb_index(std::string_view verb) const {
  auto it = std::find(verbs_.begin(), verbs_.end(), verb);
  return it == verbs_.end() ? -1 : static_cast<int>(it - verbs_.begin());
}

int Vsr::total_count() const {
  int total = 0;
  for (const auto& rc : roles) total += rc.count;
  return total;
}

bool Vsr::has_role(RoleId role) const { return count_of(role) > 0; }

int Vsr::count_of(RoleId role) const {
  for (const auto& rc : roles) {
    if (rc.role == role) return rc.count;
  }
  return 0;
}

std::string subrole_key(const SubRole& s) {
  return std::string(role_name(s.role)) + ":" + std::to_string(s.index);
}

std::string subrole_display(const SubRole& s, int role_count) {
  if (s.is_verb() || role_count <= 1) return std::string(role_name(s.role));
  return std::string(role_name(s.role)) + "-" + std::to_string(s.index);
}

SubRole subrole_from_key(std::string_view key) {
  auto colon = key.find(':');
  auto role = role_from_name(key.substr(0, colon));
  if (!role) {
    throw Error(ErrorCode::kParseError,
                "unknown role in sub-role key '" + std::string(key) + "'");
  }
  int index = 1;
  if (colon != std::string_view::npos) {
    auto digits = key.substr(colon + 1);
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc() || ptr != digits.data() + digits.size() ||
        index < 1) {
      throw Error(ErrorCode::kParseError,
                  "bad sub-role index in '" + std::string(key) + "'");
    }
  }
  return SubRole{*role, index};
}

int SemanticStructure::verb_count() const {
  return static_cast<int>(std::count_if(
      subroles.begin(), subroles.end(),
      [](const SubRole& s) { return s.is_verb(); }));
}

std::vector<RoleId> SemanticStructure::role_order() const {
  std::vector<RoleId> order;
  for (const auto& s : subroles) {
    if (std::find(order.begin(), order.end(), s.role) == order.end()) {
      order.push_back(s.role);
    }
  }
  return order;
}

ValidationResult validate_vsr(const Vsr& vsr, const VerbLexicon& lex,
                              int n_max) {
  if (!lex.contains(vsr.verb)) {
    return fail(ErrorCode::kUnknownVerb, "'" + vsr.verb + "'");
  }
  if (vsr.roles.empty()) {
    return fail(ErrorCode::kEmptyRoles, "VSR for '" + vsr.verb + "'");
  }
  const auto& allowed = lex.allowed_roles(vsr.verb);
  std::set<RoleId> seen;
  for (const auto& rc : vsr.roles) {
    if (!seen.insert(rc.role).second) {
      return fail(ErrorCode::kDuplicateRole, std::string(role_name(rc.role)));
    }
    if (!is_semantic_role(rc.role) || !allowed.count(rc.role)) {
      return fail(ErrorCode::kRoleNotAllowedForVerb,
                  std::string(role_name(rc.role)) + " for '" + vsr.verb + "'");
    }
    if (rc.count < 1 || rc.count > n_max) {
      return fail(ErrorCode::kCountOutOfRange,
                  std::string(role_name(rc.role)) + ":" +
                      std::to_string(rc.count));
    }
  }
  return {};
}

void require_valid_vsr(const Vsr& vsr, const VerbLexicon& lex, int n_max) {
  auto result = validate_vsr(vsr, lex, n_max);
  if (!result) throw Error(result.code, result.message);
}

std::vector<SubRole> expand_sub_roles(const Vsr& vsr) {
  std::vector<SubRole> out;
  out.reserve(static_cast<std::size_t>(vsr.total_count()));
  for (const auto& rc : vsr.roles) {
    for (int k = 1; k <= rc.count; ++k) out.push_back(SubRole{rc.role, k});
  }
  return out;
}

ValidationResult validate_structure(const SemanticStructure& s,
                                    const Vsr& vsr) {
  if (s.verb_count() != 1) {
    return fail(ErrorCode::kInvalidInput, "structure needs exactly one verb");
  }
  std::set<SubRole> seen;
  std::vector<SubRole> non_verb;
  for (const auto& sub : s.subroles) {
    if (!seen.insert(sub).second) {
      return fail(ErrorCode::kInvalidInput,
                  "duplicate sub-role " + subrole_key(sub));
    }
    if (!sub.is_verb()) non_verb.push_back(sub);
  }
  auto expected = expand_sub_roles(vsr);
  std::sort(non_verb.begin(), non_verb.end());
  std::sort(expected.begin(), expected.end());
  if (non_verb != expected) {
    return fail(ErrorCode::kInvalidInput,
                "structure does not match VSR " + format_vsr(vsr));
  }
  return {};
}

Vsr parse_vsr(std::string_view text) {
  Vsr vsr;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) break;
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t') ++pos;
    std::string_view token = text.substr(start, pos - start);
    auto at = [&](const std::string& what) {
      return Error(ErrorCode::kParseError,
                   what + " at position " + std::to_string(start) + " ('" +
                       std::string(token) + "')");
    };
    if (first) {
      if (token.find(':') != std::string_view::npos) {
        throw at("expected a verb");
      }
      vsr.verb = std::string(token);
      first = false;
      continue;
    }
    auto colon = token.find(':');
    if (colon == std::string_view::npos) throw at("expected role:count");
    auto role = role_from_name(token.substr(0, colon));
    if (!role || *role == kVerbRole) throw at("unknown role");
    auto digits = token.substr(colon + 1);
    int count = 0;
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), count);
    if (digits.empty() || ec != std::errc() ||
        ptr != digits.data() + digits.size()) {
      throw at("bad count");
    }
    vsr.roles.push_back(RoleCount{*role, count});
  }
  if (first) throw Error(ErrorCode::kParseError, "empty VSR at position 0");
  return vsr;
}

std::string format_vsr(const Vsr& vsr) {
  std::ostringstream os;
  os << vsr.verb;
  for (const auto& rc : vsr.roles) {
    os << ' ' << role_name(rc.role) << ':' << rc.count;
  }
  return os.str();
}

}  // namespace vsrcap
