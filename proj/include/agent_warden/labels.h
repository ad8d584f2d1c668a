// Copyright 2026 The Agent Warden Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ABAC attribute taxonomy for tools, agents and RAG databases, label-set
// files, and two-rater agreement (Cohen's kappa) between label sets.

#ifndef AGENT_WARDEN_LABELS_H_
#define AGENT_WARDEN_LABELS_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace agent_warden {

enum class SubjectKind { kUser, kAgent, kTool, kRagDb };

// Surface names: "user", "agent", "tool", "db".
std::string_view KindName(SubjectKind kind);
// Accepts the surface names plus "rag_db", case-insensitively.
std::optional<SubjectKind> ParseKind(std::string_view text);

enum class Attribute { kObject, kAction, kSensitivity, kIntegrity, kPrivacy };

inline constexpr std::array<Attribute, 5> kAllAttributes = {
    Attribute::kObject, Attribute::kAction, Attribute::kSensitivity,
    Attribute::kIntegrity, Attribute::kPrivacy};

// Canonical lower-case attribute name. `integrality` is never emitted.
std::string_view AttributeName(Attribute attribute);
// Case-insensitive; folds the `integrality` alias onto kIntegrity.
std::optional<Attribute> ParseAttribute(std::string_view text);

// Upper-case enum members of an attribute, in declaration order.
std::span<const std::string_view> AllowedValues(Attribute attribute);
bool IsAllowedValue(Attribute attribute, std::string_view value);

// Which attributes each subject kind carries.
using AttributeSchema = std::map<SubjectKind, std::set<Attribute>>;
const AttributeSchema& DefaultSchema();

struct SubjectLabel {
  std::string name;
  SubjectKind kind = SubjectKind::kTool;
  std::map<Attribute, std::string> attributes;

  std::optional<std::string_view> Get(Attribute attribute) const;
  bool operator==(const SubjectLabel&) const = default;
};

// Canonicalizes a raw attribute map: alias folding and upper-casing of values.
// Throws kUnknownAttribute, kUnknownValue or kMissingAttribute.
SubjectLabel ValidateLabel(std::string name, SubjectKind kind,
                           const std::map<std::string, std::string>& raw);

// Canonical raw map, suitable for feeding back into ValidateLabel.
std::map<std::string, std::string> RenderLabel(const SubjectLabel& label);

enum class Provenance { kHuman, kLlm, kHybrid };

std::string_view ProvenanceName(Provenance provenance);

class LabelSet {
 public:
  struct Entry {
    SubjectLabel label;
    Provenance provenance = Provenance::kHuman;
  };

  // Throws kSchemaError on a duplicate name.
  void Add(SubjectLabel label, Provenance provenance = Provenance::kHuman);

  const SubjectLabel* Find(std::string_view name) const;
  // Throws kUnlabeledSubject.
  const SubjectLabel& At(std::string_view name) const;

  const std::map<std::string, Entry, std::less<>>& entries() const {
    return entries_;
  }
  size_t size() const { return entries_.size(); }

  // Format: {"subjects":[{"name", "kind", "labels":{...}, "provenance"?}]}.
  // Unknown keys at either level are rejected with kSchemaError.
  static LabelSet FromJson(const nlohmann::json& doc);
  static LabelSet Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

// Two-rater Cohen's kappa over nominal categories.
// Throws kLengthMismatch or kEmptyInput. Returns 1.0 when both raters used one
// identical category throughout (chance agreement of 1).
double CohensKappa(std::span<const std::string> ratings_a,
                   std::span<const std::string> ratings_b);

struct KappaReport {
  std::map<Attribute, double> per_attribute;
  // Single kappa over every (subject, attribute) judgment pooled together.
  double overall = 0.0;
  // Number of tool entries the per-attribute values were computed over.
  size_t item_count = 0;
};

// Throws kCoverageMismatch when the two sets do not cover the same subjects
// with the same kinds.
KappaReport ComputeKappaReport(const LabelSet& set_a, const LabelSet& set_b);

nlohmann::json KappaReportToJson(const KappaReport& report);

}  // namespace agent_warden

#endif  // AGENT_WARDEN_LABELS_H_
