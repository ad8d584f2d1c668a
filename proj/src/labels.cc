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

#include "agent_warden/labels.h"

#include <algorithm>
#include <unordered_map>

#include "agent_warden/error.h"
#include "text_util.h"

namespace agent_warden {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kObjectValues = {"LOCAL", "EXTERNAL",
                                                           "PHYSICAL"};
constexpr std::array<std::string_view, 3> kActionValues = {"READ", "WRITE",
                                                           "EXECUTE"};
constexpr std::array<std::string_view, 3> kSensitivityValues = {
    "LOW", "MODERATE", "HIGH"};
constexpr std::array<std::string_view, 2> kIntegrityValues = {"TRUSTED",
                                                              "UNFILTERED"};
constexpr std::array<std::string_view, 2> kPrivacyValues = {"GENERAL",
                                                            "PERSONAL"};

}  // namespace

std::string_view KindName(SubjectKind kind) {
  switch (kind) {
    case SubjectKind::kUser: return "user";
    case SubjectKind::kAgent: return "agent";
    case SubjectKind::kTool: return "tool";
    case SubjectKind::kRagDb: return "db";
  }
  return "?";
}

std::optional<SubjectKind> ParseKind(std::string_view text) {
  const std::string lower = internal::ToLower(text);
  if (lower == "user") return SubjectKind::kUser;
  if (lower == "agent") return SubjectKind::kAgent;
  if (lower == "tool") return SubjectKind::kTool;
  if (lower == "db" || lower == "rag_db") return SubjectKind::kRagDb;
  return std::nullopt;
}

std::string_view AttributeName(Attribute attribute) {
  switch (attribute) {
    case Attribute::kObject: return "object";
    case Attribute::kAction: return "action";
    case Attribute::kSensitivity: return "sensitivity";
    case Attribute::kIntegrity: return "integrity";
    case Attribute::kPrivacy: return "privacy";
  }
  return "?";
}

std::optional<Attribute> ParseAttribute(std::string_view text) {
  const std::string lower = internal::ToLower(text);
  if (lower == "integrality") return Attribute::kIntegrity;
  for (Attribute a : kAllAttributes) {
    if (lower == AttributeName(a)) return a;
  }
  return std::nullopt;
}

std::span<const std::string_view> AllowedValues(Attribute attribute) {
  switch (attribute) {
    case Attribute::kObject: return kObjectValues;
    case Attribute::kAction: return kActionValues;
    case Attribute::kSensitivity: return kSensitivityValues;
    case Attribute::kIntegrity: return kIntegrityValues;
    case Attribute::kPrivacy: return kPrivacyValues;
  }
  return {};
}

bool IsAllowedValue(Attribute attribute, std::string_view value) {
  auto values = AllowedValues(attribute);
  return std::find(values.begin(), values.end(), value) != values.end();
}

const AttributeSchema& DefaultSchema() {
  static const AttributeSchema schema = {
      {SubjectKind::kUser, {}},
      {SubjectKind::kAgent, {Attribute::kIntegrity}},
      {SubjectKind::kTool,
       {kAllAttributes.begin(), kAllAttributes.end()}},
      {SubjectKind::kRagDb, {Attribute::kIntegrity, Attribute::kPrivacy}},
  };
  return schema;
}

std::optional<std::string_view> SubjectLabel::Get(Attribute attribute) const {
  auto it = attributes.find(attribute);
  if (it == attributes.end()) return std::nullopt;
  return it->second;
}

SubjectLabel ValidateLabel(std::string name, SubjectKind kind,
                           const std::map<std::string, std::string>& raw) {
  const std::set<Attribute>& required = DefaultSchema().at(kind);
  SubjectLabel label{std::move(name), kind, {}};
  for (const auto& [key, value] : raw) {
    auto attribute = ParseAttribute(key);
    if (!attribute || !required.contains(*attribute)) {
      throw Error(ErrorCode::kUnknownAttribute,
                  "attribute '" + key + "' does not apply to " +
                      std::string(KindName(kind)) + " '" + label.name + "'");
    }
    std::string canonical = internal::ToUpper(value);
    if (!IsAllowedValue(*attribute, canonical)) {
      throw Error(ErrorCode::kUnknownValue,
                  "'" + value + "' is not a value of " +
                      std::string(AttributeName(*attribute)) + " (subject '" +
                      label.name + "')");
    }
    if (!label.attributes.emplace(*attribute, std::move(canonical)).second) {
      throw Error(ErrorCode::kSchemaError,
                  "attribute " + std::string(AttributeName(*attribute)) +
                      " given twice for '" + label.name + "'");
    }
  }
  for (Attribute a : required) {
    if (!label.attributes.contains(a)) {
      throw Error(ErrorCode::kMissingAttribute,
                  std::string(KindName(kind)) + " '" + label.name +
                      "' lacks attribute " + std::string(AttributeName(a)));
    }
  }
  return label;
}

std::map<std::string, std::string> RenderLabel(const SubjectLabel& label) {
  std::map<std::string, std::string> raw;
  for (const auto& [attribute, value] : label.attributes) {
    raw.emplace(AttributeName(attribute), value);
  }
  return raw;
}

std::string_view ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kHuman: return "HUMAN";
    case Provenance::kLlm: return "LLM";
    case Provenance::kHybrid: return "HYBRID";
  }
  return "?";
}

void LabelSet::Add(SubjectLabel label, Provenance provenance) {
  std::string name = label.name;
  if (!entries_.emplace(name, Entry{std::move(label), provenance}).second) {
    throw Error(ErrorCode::kSchemaError, "duplicate subject '" + name + "'");
  }
}

const SubjectLabel* LabelSet::Find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second.label;
}

const SubjectLabel& LabelSet::At(std::string_view name) const {
  const SubjectLabel* label = Find(name);
  if (label == nullptr) {
    throw Error(ErrorCode::kUnlabeledSubject,
                "no label for '" + std::string(name) + "'");
  }
  return *label;
}

namespace {

void RequireKeys(const json& object, std::initializer_list<std::string_view> allowed,
                 std::string_view where) {
  if (!object.is_object()) {
    throw Error(ErrorCode::kSchemaError, std::string(where) + " must be an object");
  }
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw Error(ErrorCode::kSchemaError, "unknown key '" + item.key() +
                                               "' in " + std::string(where));
    }
  }
}

std::string RequireString(const json& object, const char* key, std::string_view where) {
  auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw Error(ErrorCode::kSchemaError, std::string(where) + " needs string '" +
                                             key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

LabelSet LabelSet::FromJson(const json& doc) {
  RequireKeys(doc, {"subjects"}, "label set");
  auto subjects = doc.find("subjects");
  if (subjects == doc.end() || !subjects->is_array()) {
    throw Error(ErrorCode::kSchemaError, "label set needs a 'subjects' array");
  }
  LabelSet set;
  for (const json& entry : *subjects) {
    RequireKeys(entry, {"name", "kind", "labels", "provenance"}, "subject");
    std::string name = RequireString(entry, "name", "subject");
    std::string kind_text = RequireString(entry, "kind", "subject '" + name + "'");
    auto kind = ParseKind(kind_text);
    if (!kind) {
      throw Error(ErrorCode::kSchemaError, "unknown kind '" + kind_text + "'");
    }
    std::map<std::string, std::string> raw;
    if (auto labels = entry.find("labels"); labels != entry.end()) {
      if (!labels->is_object()) {
        throw Error(ErrorCode::kSchemaError, "labels of '" + name + "' must be an object");
      }
      for (const auto& item : labels->items()) {
        if (!item.value().is_string()) {
          throw Error(ErrorCode::kSchemaError,
                      "label value " + item.key() + " of '" + name + "' must be a string");
        }
        raw.emplace(item.key(), item.value().get<std::string>());
      }
    }
    Provenance provenance = Provenance::kHuman;
    if (entry.contains("provenance")) {
      std::string p = internal::ToUpper(RequireString(entry, "provenance", "subject"));
      if (p == "HUMAN") provenance = Provenance::kHuman;
      else if (p == "LLM") provenance = Provenance::kLlm;
      else if (p == "HYBRID") provenance = Provenance::kHybrid;
      else throw Error(ErrorCode::kSchemaError, "unknown provenance '" + p + "'");
    }
    set.Add(ValidateLabel(name, *kind, raw), provenance);
  }
  return set;
}

LabelSet LabelSet::Load(const std::filesystem::path& path) {
  const std::string text = internal::ReadFile(path);
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kSchemaError, path.string() + " is not valid JSON");
  }
  return FromJson(doc);
}

json LabelSet::ToJson() const {
  json subjects = json::array();
  for (const auto& [name, entry] : entries_) {
    subjects.push_back({{"name", name},
                        {"kind", KindName(entry.label.kind)},
                        {"labels", RenderLabel(entry.label)},
                        {"provenance", ProvenanceName(entry.provenance)}});
  }
  return {{"subjects", subjects}};
}

double CohensKappa(std::span<const std::string> ratings_a,
                   std::span<const std::string> ratings_b) {
  if (ratings_a.size() != ratings_b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(ratings_a.size()) + " vs " +
                    std::to_string(ratings_b.size()) + " ratings");
  }
  if (ratings_a.empty()) throw Error(ErrorCode::kEmptyInput, "no ratings");

  const double n = static_cast<double>(ratings_a.size());
  std::unordered_map<std::string_view, std::pair<size_t, size_t>> marginals;
  size_t agreements = 0;
  for (size_t i = 0; i < ratings_a.size(); ++i) {
    ++marginals[ratings_a[i]].first;
    ++marginals[ratings_b[i]].second;
    if (ratings_a[i] == ratings_b[i]) ++agreements;
  }
  const double observed = static_cast<double>(agreements) / n;
  double expected = 0.0;
  for (const auto& [category, counts] : marginals) {
    expected += (static_cast<double>(counts.first) / n) *
                (static_cast<double>(counts.second) / n);
  }
  // Chance agreement reaches 1 only when both raters used a single shared
  // category, which forces observed agreement to 1 as well.
  if (marginals.size() == 1) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

KappaReport ComputeKappaReport(const LabelSet& set_a, const LabelSet& set_b) {
  if (set_a.size() != set_b.size()) {
    throw Error(ErrorCode::kCoverageMismatch,
                std::to_string(set_a.size()) + " vs " +
                    std::to_string(set_b.size()) + " subjects");
  }
  std::map<Attribute, std::pair<std::vector<std::string>, std::vector<std::string>>>
      columns;
  std::vector<std::string> pooled_a;
  std::vector<std::string> pooled_b;
  KappaReport report;
  for (const auto& [name, entry_a] : set_a.entries()) {
    const SubjectLabel* label_b = set_b.Find(name);
    if (label_b == nullptr) {
      throw Error(ErrorCode::kCoverageMismatch,
                  "'" + name + "' missing from second label set");
    }
    const SubjectLabel& label_a = entry_a.label;
    if (label_a.kind != label_b->kind) {
      throw Error(ErrorCode::kCoverageMismatch, "kind of '" + name + "' differs");
    }
    for (const auto& [attribute, value_a] : label_a.attributes) {
      const std::string& value_b = label_b->attributes.at(attribute);
      // Prefix keeps categories of different attributes apart in the pool.
      std::string prefix = std::string(AttributeName(attribute)) + ":";
      pooled_a.push_back(prefix + value_a);
      pooled_b.push_back(prefix + value_b);
      if (label_a.kind == SubjectKind::kTool) {
        columns[attribute].first.push_back(value_a);
        columns[attribute].second.push_back(value_b);
      }
    }
    if (label_a.kind == SubjectKind::kTool) ++report.item_count;
  }
  for (const auto& [attribute, column] : columns) {
    report.per_attribute[attribute] = CohensKappa(column.first, column.second);
  }
  if (!pooled_a.empty()) report.overall = CohensKappa(pooled_a, pooled_b);
  return report;
}

json KappaReportToJson(const KappaReport& report) {
  json per = json::object();
  for (const auto& [attribute, kappa] : report.per_attribute) {
    per[std::string(AttributeName(attribute))] = kappa;
  }
  return {{"per_attribute", per},
          {"overall", report.overall},
          {"item_count", report.item_count}};
}

}  // namespace agent_warden
