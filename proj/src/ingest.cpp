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
#include "riskscreen/ingest.hpp"

#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "riskscreen/csv.hpp"

namespace riskscreen {

namespace {

const std::vector<std::pair<Grade, std::string>>& grade_table() {
  static const std::vector<std::pair<Grade, std::string>> t = {
      {Grade::kAPlus, "A+"}, {Grade::kA, "A"}, {Grade::kAMinus, "A-"},
      {Grade::kBPlus, "B+"}, {Grade::kB, "B"}, {Grade::kBMinus, "B-"},
      {Grade::kCPlus, "C+"}, {Grade::kC, "C"}, {Grade::kCMinus, "C-"},
      {Grade::kDPlus, "D+"}, {Grade::kD, "D"}, {Grade::kDMinus, "D-"},
      {Grade::kF, "F"},      {Grade::kW, "W"}, {Grade::kWU, "WU"},
  };
  return t;
}

std::string normalize_grade_token(std::string s) {
  // Unicode minus variants occasionally show up in exported gradebooks.
  auto pos = s.find("−");
  if (pos != std::string::npos) s.replace(pos, 3, "-");
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::optional<bool> parse_bool(const std::string& raw) {
  std::string s;
  for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "true" || s == "yes" || s == "1" || s == "y") return true;
  if (s == "false" || s == "no" || s == "0" || s == "n") return false;
  return std::nullopt;
}

}  // namespace

std::optional<Grade> parse_grade(const std::string& token) {
  const std::string norm = normalize_grade_token(token);
  for (const auto& [g, tok] : grade_table()) {
    if (tok == norm) return g;
  }
  return std::nullopt;
}

const std::string& grade_token(Grade g) {
  for (const auto& [grade, tok] : grade_table()) {
    if (grade == g) return tok;
  }
  throw DataError("unknown grade value");
}

const std::vector<Grade>& grade_alphabet() {
  static const std::vector<Grade> a = [] {
    std::vector<Grade> v;
    for (const auto& [g, tok] : grade_table()) v.push_back(g);
    return v;
  }();
  return a;
}

std::optional<FeatureCategory> parse_category(const std::string& token) {
  std::string s;
  for (char c : token) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "performance") return FeatureCategory::kPerformance;
  if (s == "demographic") return FeatureCategory::kDemographic;
  if (s == "engagement") return FeatureCategory::kEngagement;
  return std::nullopt;
}

const std::string& category_token(FeatureCategory c) {
  static const std::string perf = "performance", demo = "demographic", eng = "engagement";
  switch (c) {
    case FeatureCategory::kPerformance: return perf;
    case FeatureCategory::kDemographic: return demo;
    case FeatureCategory::kEngagement: return eng;
  }
  throw DataError("unknown feature category");
}

const FeatureSchemaEntry* SidecarSchema::find(const std::string& feature) const {
  auto it = entries.find(feature);
  return it == entries.end() ? nullptr : &it->second;
}

SidecarSchema parse_sidecar_schema(std::istream& in) {
  auto table = csv::read_csv(in);
  auto fcol = table.column("feature");
  auto ccol = table.column("category");
  if (!fcol || !ccol) {
    throw DataError("schema sidecar: required columns are feature,category[,phases]");
  }
  auto pcol = table.column("phases");
  SidecarSchema schema;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    FeatureSchemaEntry entry;
    auto cat = parse_category(row[*ccol]);
    if (!cat) {
      throw DataError("schema sidecar row " + std::to_string(i + 2) +
                      ": unknown category '" + row[*ccol] + "'");
    }
    entry.category = *cat;
    if (pcol && !row[*pcol].empty() && row[*pcol] != "all") {
      entry.phases.clear();
      std::stringstream ss(row[*pcol]);
      std::string part;
      while (std::getline(ss, part, ';')) {
        try {
          entry.phases.insert(std::stoi(part));
        } catch (const std::exception&) {
          throw DataError("schema sidecar row " + std::to_string(i + 2) +
                          ": bad phase token '" + part + "'");
        }
      }
    }
    if (!schema.entries.emplace(row[*fcol], entry).second) {
      throw DataError("schema sidecar: duplicate feature '" + row[*fcol] + "'");
    }
  }
  return schema;
}

SidecarSchema load_sidecar_schema(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open schema sidecar: " + path);
  return parse_sidecar_schema(f);
}

void write_sidecar_schema(const SidecarSchema& schema, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write schema sidecar: " + path);
  f << "feature,category,phases\n";
  for (const auto& [name, entry] : schema.entries) {
    std::string phases;
    if (entry.phases == std::set<int>{1, 2, 3}) {
      phases = "all";
    } else {
      for (int p : entry.phases) {
        if (!phases.empty()) phases.push_back(';');
        phases += std::to_string(p);
      }
    }
    f << csv::join_row({name, category_token(entry.category), phases});
  }
}

bool RiskRule::applies(const StudentRecord& r) const {
  const bool failing = failing_grades.count(r.letter_grade) > 0;
  const bool repeat_ok = !require_repeat || r.repeated_course;
  if (disjunction) return failing || (require_repeat && r.repeated_course);
  return failing && repeat_ok;
}

std::size_t LabelVector::positive_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

Roster parse_roster(std::istream& in) {
  auto table = csv::read_csv(in);

  static const std::array<const char*, 6> required = {
      "student_id", "name", "email", "consent", "letter_grade", "repeated_course"};
  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    col_index.emplace(table.header[i], i);
  }
  for (const char* col : required) {
    if (!col_index.count(col)) {
      throw DataError(std::string("roster: missing required column '") + col + "'");
    }
  }

  Roster roster;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const bool is_required =
        std::find_if(required.begin(), required.end(), [&](const char* c) {
          return table.header[i] == c;
        }) != required.end();
    if (!is_required) {
      roster.feature_names.push_back(table.header[i]);
      feature_cols.push_back(i);
    }
  }

  std::unordered_set<std::string> seen_ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string row_name = "roster row " + std::to_string(r + 2);
    StudentRecord rec;
    rec.student_id = row[col_index["student_id"]];
    if (rec.student_id.empty()) throw DataError(row_name + ": empty student_id");
    if (!seen_ids.insert(rec.student_id).second) {
      throw DataError(row_name + ": duplicate student_id '" + rec.student_id + "'");
    }
    rec.name = row[col_index["name"]];
    rec.email = row[col_index["email"]];

    auto consent = parse_bool(row[col_index["consent"]]);
    if (!consent) {
      throw DataError(row_name + ", column consent: bad boolean '" +
                      row[col_index["consent"]] + "'");
    }
    rec.consent = *consent;

    auto grade = parse_grade(row[col_index["letter_grade"]]);
    if (!grade) {
      throw DataError(row_name + ", column letter_grade: unknown grade token '" +
                      row[col_index["letter_grade"]] + "'");
    }
    rec.letter_grade = *grade;

    auto repeated = parse_bool(row[col_index["repeated_course"]]);
    if (!repeated) {
      throw DataError(row_name + ", column repeated_course: bad boolean '" +
                      row[col_index["repeated_course"]] + "'");
    }
    rec.repeated_course = *repeated;

    rec.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      if (row[c].empty()) {
        rec.features.push_back(std::nullopt);
      } else {
        rec.features.push_back(row[c]);
      }
    }
    roster.records.push_back(std::move(rec));
  }
  return roster;
}

Roster load_roster(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".xlsx") {
    throw DataError("xlsx rosters are not supported; export the sheet as CSV first: " + path);
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open roster: " + path);
  return parse_roster(f);
}

Roster filter_consent(const Roster& roster, WarningSink& warnings) {
  Roster out;
  out.feature_names = roster.feature_names;
  for (const auto& rec : roster.records) {
    if (rec.consent) out.records.push_back(rec);
  }
  if (out.records.empty() && !roster.records.empty()) {
    warnings.warn("consent filter removed every record");
  }
  return out;
}

namespace {

std::string hmac_sha256_hex16(const std::string& key, const std::string& message) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const unsigned char*>(message.data()), message.size(),
       digest, &digest_len);
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(16);
  for (unsigned i = 0; i < 8; ++i) {  // 16 hex chars = 64 bits
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

bool shares_4gram(const std::string& token, const std::string& raw) {
  if (raw.size() < 4) return false;
  for (std::size_t i = 0; i + 4 <= raw.size(); ++i) {
    if (token.find(raw.substr(i, 4)) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::string pseudonymize_id(const std::string& raw_id, const std::string& key) {
  if (key.empty()) throw ConfigError("pseudonymization key must be nonempty");
  std::string token = hmac_sha256_hex16(key, raw_id);
  // Rehash with a counter until the token shares no 4-gram with the raw id.
  for (unsigned counter = 1; shares_4gram(token, raw_id); ++counter) {
    token = hmac_sha256_hex16(key, raw_id + '\0' + std::to_string(counter));
  }
  return token;
}

Roster pseudonymize(const Roster& roster, const std::string& key) {
  if (key.empty()) throw ConfigError("pseudonymization key must be nonempty");
  Roster out;
  out.feature_names = roster.feature_names;
  out.records.reserve(roster.records.size());
  for (const auto& rec : roster.records) {
    StudentRecord anon = rec;
    anon.student_id = pseudonymize_id(rec.student_id, key);
    anon.name.clear();
    anon.email.clear();
    anon.pseudonymized = true;
    out.records.push_back(std::move(anon));
  }
  return out;
}

LabelVector derive_at_risk_labels(const Roster& roster, const RiskRule& rule) {
  if (rule.failing_grades.empty()) throw ConfigError("risk rule: failing_grades is empty");
  LabelVector y;
  y.labels.reserve(roster.records.size());
  for (const auto& rec : roster.records) {
    y.labels.push_back(rule.applies(rec) ? 1 : 0);
  }
  return y;
}

bool contains_identifier(const std::string& text,
                         const std::vector<std::string>& raw_identifiers,
                         std::string* which) {
  for (const auto& id : raw_identifiers) {
    if (id.size() < 3) continue;
    if (text.find(id) != std::string::npos) {
      if (which) *which = id;
      return true;
    }
  }
  return false;
}

}  // namespace riskscreen
