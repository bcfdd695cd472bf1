/*
 * Copyright 2026 the riskscreen authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskscreen/common.hpp"

namespace riskscreen {

// Letter grade alphabet. Anything else is a parse error, never a silent
// missing value.
enum class Grade {
  kAPlus, kA, kAMinus,
  kBPlus, kB, kBMinus,
  kCPlus, kC, kCMinus,
  kDPlus, kD, kDMinus,
  kF, kW, kWU,
};

std::optional<Grade> parse_grade(const std::string& token);
const std::string& grade_token(Grade g);
const std::vector<Grade>& grade_alphabet();

enum class FeatureCategory { kPerformance, kDemographic, kEngagement };

std::optional<FeatureCategory> parse_category(const std::string& token);
const std::string& category_token(FeatureCategory c);

// One sidecar entry: which category a feature belongs to and in which
// semester phases it is available (grade-derived features are absent
// mid-semester).
struct FeatureSchemaEntry {
  FeatureCategory category = FeatureCategory::kDemographic;
  std::set<int> phases = {1, 2, 3};
};

// Sidecar file: CSV `feature,category,phases`, phases either "all" or a
// semicolon list like "2;3".
struct SidecarSchema {
  std::map<std::string, FeatureSchemaEntry> entries;

  const FeatureSchemaEntry* find(const std::string& feature) const;
};

SidecarSchema parse_sidecar_schema(std::istream& in);
SidecarSchema load_sidecar_schema(const std::string& path);
void write_sidecar_schema(const SidecarSchema& schema, const std::string& path);

struct StudentRecord {
  std::string student_id;  // raw CWID until pseudonymized
  std::string name;        // cleared by pseudonymization
  std::string email;       // cleared by pseudonymization
  bool consent = false;
  Grade letter_grade = Grade::kF;
  bool repeated_course = false;
  // Raw cells for the extra columns, aligned to Roster::feature_names.
  std::vector<std::optional<std::string>> features;
  bool pseudonymized = false;
};

struct Roster {
  std::vector<std::string> feature_names;  // undeclared extra columns, in file order
  std::vector<StudentRecord> records;
};

struct RiskRule {
  std::set<Grade> failing_grades = {Grade::kDPlus, Grade::kD, Grade::kDMinus,
                                    Grade::kF, Grade::kWU};
  bool require_repeat = true;
  // When true the rule is grade OR repeat instead of the default AND.
  bool disjunction = false;

  bool applies(const StudentRecord& r) const;
};

struct LabelVector {
  std::vector<int> labels;  // 0 = not at risk, 1 = at risk

  std::size_t size() const { return labels.size(); }
  std::size_t positive_count() const;
  std::size_t negative_count() const { return labels.size() - positive_count(); }
};

// Required roster columns: student_id,name,email,consent,letter_grade,
// repeated_course. Every other column becomes a candidate feature; empty
// cells become missing markers.
Roster parse_roster(std::istream& in);
Roster load_roster(const std::string& path);  // rejects .xlsx with advice

Roster filter_consent(const Roster& roster, WarningSink& warnings);

// Replaces student_id with a fixed-length keyed-hash hex token and drops
// name/email. Deterministic per key. The token is guaranteed to share no
// 4-character substring with the raw id.
Roster pseudonymize(const Roster& roster, const std::string& key);
std::string pseudonymize_id(const std::string& raw_id, const std::string& key);

LabelVector derive_at_risk_labels(const Roster& roster, const RiskRule& rule);

// True if `text` contains any of the raw identifiers (substring match,
// identifiers shorter than 3 chars are skipped to avoid trivial hits).
bool contains_identifier(const std::string& text,
                         const std::vector<std::string>& raw_identifiers,
                         std::string* which = nullptr);

}  // namespace riskscreen
