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
#include "riskscreen/syndata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "riskscreen/csv.hpp"
#include "riskscreen/rng.hpp"

namespace riskscreen {

void GeneratorConfig::validate() const {
  if (n_students == 0) throw ConfigError("generator: n_students must be >= 1");
  if (n_at_risk >= n_students) {
    throw ConfigError("generator: n_at_risk must be smaller than n_students");
  }
  if (missing_rate < 0.0 || missing_rate > 0.5) {
    throw ConfigError("generator: missing_rate must lie in [0, 0.5]");
  }
  if (separation < 0.0) throw ConfigError("generator: separation must be >= 0");
  if (no_consent_count >= n_students) {
    throw ConfigError("generator: no_consent_count must be smaller than n_students");
  }
}

const std::vector<NumericFeatureParam>& default_numeric_features() {
  using FC = FeatureCategory;
  static const std::vector<NumericFeatureParam> defaults = {
      // Current Score depends on grades, so it is a phase-3-only feature.
      {"Current Score", FC::kPerformance, 82.0, 8.0, -1.2, 0.0, 100.0, 1, {3}},
      {"GPA", FC::kDemographic, 3.1, 0.45, -1.0, 0.0, 4.0, 2, {1, 2, 3}},
      {"Units Earned", FC::kDemographic, 60.0, 25.0, -0.4, 0.0, 150.0, 0, {1, 2, 3}},
      {"Page Views", FC::kEngagement, 420.0, 130.0, -0.8, 0.0, 5000.0, 0, {1, 2, 3}},
      {"Participation", FC::kEngagement, 25.0, 9.0, -0.9, 0.0, 500.0, 0, {1, 2, 3}},
      {"Assignment on Time", FC::kEngagement, 88.0, 10.0, -1.0, 0.0, 100.0, 1, {1, 2, 3}},
      {"Student Engagement", FC::kDemographic, 70.0, 12.0, -0.8, 0.0, 100.0, 1, {1, 2, 3}},
      {"Units Attempting", FC::kDemographic, 13.0, 2.5, 0.2, 3.0, 21.0, 0, {1, 2, 3}},
  };
  return defaults;
}

namespace {

std::string format_value(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

const char* kProgramActions[] = {"GOOD_STANDING", "NONE", "PROBATION", "SUSPENSION"};

std::size_t weighted_pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x -= weights[i];
    if (x < 0.0) return i;
  }
  return weights.size() - 1;
}

Grade pick_passing_grade(Rng& rng) {
  static const Grade passing[] = {Grade::kAPlus, Grade::kA,      Grade::kAMinus,
                                  Grade::kBPlus, Grade::kB,      Grade::kBMinus,
                                  Grade::kCPlus, Grade::kC,      Grade::kCMinus,
                                  Grade::kW};
  static const std::vector<double> weights = {0.04, 0.16, 0.10, 0.10, 0.18,
                                              0.10, 0.09, 0.12, 0.07, 0.04};
  return passing[weighted_pick(rng, weights)];
}

Grade pick_failing_grade(Rng& rng) {
  static const Grade failing[] = {Grade::kDPlus, Grade::kD, Grade::kDMinus,
                                  Grade::kF, Grade::kWU};
  static const std::vector<double> weights = {0.2, 0.3, 0.15, 0.25, 0.1};
  return failing[weighted_pick(rng, weights)];
}

}  // namespace

GeneratedRoster generate_roster(const GeneratorConfig& config) {
  config.validate();
  const auto& numeric =
      config.numeric_features.empty() ? default_numeric_features() : config.numeric_features;

  Rng rng(config.seed);

  // Label layout, consent layout, and unique 9-digit CWIDs.
  std::vector<int> truth(config.n_students, 0);
  std::fill(truth.begin(), truth.begin() + static_cast<long>(config.n_at_risk), 1);
  rng.shuffle(truth);

  std::vector<int> consent(config.n_students, 1);
  std::fill(consent.begin(), consent.begin() + static_cast<long>(config.no_consent_count), 0);
  rng.shuffle(consent);

  std::vector<std::string> cwids;
  std::set<std::uint64_t> used;
  while (cwids.size() < config.n_students) {
    const std::uint64_t id = 100000000ULL + rng.below(900000000ULL);
    if (used.insert(id).second) cwids.push_back(std::to_string(id));
  }

  // Program Action weights, pulled toward PROBATION for the at-risk class.
  const double t = std::min(1.0, config.separation / 2.0);
  const std::vector<double> action_neg = {0.70, 0.22, 0.06, 0.02};
  const std::vector<double> action_target = {0.15, 0.20, 0.50, 0.15};
  std::vector<double> action_pos(4);
  for (std::size_t i = 0; i < 4; ++i) {
    action_pos[i] = action_neg[i] * (1.0 - t) + action_target[i] * t;
  }

  std::ostringstream roster;
  roster << "student_id,name,email,consent,letter_grade,repeated_course";
  for (const auto& f : numeric) roster << "," << csv::escape_field(f.name);
  roster << ",Assignment Missing,Program Action";
  for (std::size_t e = 0; e < config.n_extra_features; ++e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ",extra_%02zu", e + 1);
    roster << buf;
  }
  roster << "\n";

  std::ostringstream labels;
  labels << "student_id,at_risk\n";

  for (std::size_t i = 0; i < config.n_students; ++i) {
    const bool at_risk = truth[i] == 1;
    std::vector<std::string> row;
    row.push_back(cwids[i]);
    {
      char name[64], email[64];
      std::snprintf(name, sizeof(name), "Student %04zu", i + 1);
      std::snprintf(email, sizeof(email), "student%04zu@example.edu", i + 1);
      row.push_back(name);
      row.push_back(email);
    }
    row.push_back(consent[i] ? "true" : "false");

    // Grade and repeat flag must reproduce the default risk rule exactly:
    // at-risk = failing grade AND repeated course.
    Grade grade;
    bool repeated;
    if (at_risk) {
      grade = pick_failing_grade(rng);
      repeated = true;
    } else {
      const double u = rng.uniform();
      if (u < 0.08) {
        grade = pick_failing_grade(rng);  // failing but never repeated
        repeated = false;
      } else if (u < 0.22) {
        grade = pick_passing_grade(rng);
        repeated = true;
      } else {
        grade = pick_passing_grade(rng);
        repeated = false;
      }
    }
    row.push_back(grade_token(grade));
    row.push_back(repeated ? "true" : "false");

    for (const auto& f : numeric) {
      const double mean =
          f.mean + (at_risk ? f.gap_sd * f.stddev * config.separation : 0.0);
      double v = rng.normal(mean, f.stddev);
      v = std::clamp(v, f.min_value, f.max_value);
      const bool missing = rng.uniform() < config.missing_rate;
      row.push_back(missing ? "" : format_value(v, f.decimals));
    }

    {
      const double p_missing_assignment =
          at_risk ? std::min(0.9, 0.2 + 0.35 * config.separation) : 0.2;
      const bool value = rng.uniform() < p_missing_assignment;
      const bool missing = rng.uniform() < config.missing_rate;
      row.push_back(missing ? "" : (value ? "true" : "false"));
    }
    {
      const auto pick = weighted_pick(rng, at_risk ? action_pos : action_neg);
      const bool missing = rng.uniform() < config.missing_rate;
      row.push_back(missing ? "" : kProgramActions[pick]);
    }
    for (std::size_t e = 0; e < config.n_extra_features; ++e) {
      const double v = rng.normal(50.0, 10.0);
      const bool missing = rng.uniform() < config.missing_rate;
      row.push_back(missing ? "" : format_value(v, 2));
    }

    roster << csv::join_row(row);
    labels << cwids[i] << "," << (at_risk ? 1 : 0) << "\n";
  }

  std::ostringstream schema;
  schema << "feature,category,phases\n";
  auto phases_token = [](const std::vector<int>& phases) {
    if (phases == std::vector<int>{1, 2, 3}) return std::string("all");
    std::string out;
    for (int p : phases) {
      if (!out.empty()) out.push_back(';');
      out += std::to_string(p);
    }
    return out;
  };
  for (const auto& f : numeric) {
    schema << csv::join_row({f.name, category_token(f.category), phases_token(f.phases)});
  }
  // Table I files these two under demographic data.
  schema << "Assignment Missing,demographic,all\n";
  schema << "Program Action,demographic,all\n";
  for (std::size_t e = 0; e < config.n_extra_features; ++e) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "extra_%02zu,engagement,all\n", e + 1);
    schema << buf;
  }

  GeneratedRoster out;
  out.roster_csv = roster.str();
  out.schema_csv = schema.str();
  out.labels_csv = labels.str();
  return out;
}

void write_generated_roster(const GeneratedRoster& roster, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw DataError("cannot write " + name + " under " + dir);
    f << content;
  };
  write("roster.csv", roster.roster_csv);
  write("schema.csv", roster.schema_csv);
  write("labels.csv", roster.labels_csv);
}

}  // namespace riskscreen
