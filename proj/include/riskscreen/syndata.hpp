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

#include <cstdint>
#include <string>
#include <vector>

#include "riskscreen/ingest.hpp"

namespace riskscreen {

// Class-conditional Gaussian for one numeric roster feature. The at-risk
// mean is shifted by gap_sd * stddev * separation (signed), then values are
// clipped to [min_value, max_value].
struct NumericFeatureParam {
  std::string name;
  FeatureCategory category = FeatureCategory::kDemographic;
  double mean = 0.0;
  double stddev = 1.0;
  double gap_sd = 0.0;  // shift applied to the at-risk class, in stddev units
  double min_value = 0.0;
  double max_value = 100.0;
  int decimals = 1;
  std::vector<int> phases = {1, 2, 3};
};

struct GeneratorConfig {
  std::size_t n_students = 119;
  std::size_t n_at_risk = 21;
  std::uint64_t seed = 0;
  double missing_rate = 0.05;  // per feature cell
  double separation = 2.0;     // class-mean gap multiplier; 0 = indistinguishable
  std::size_t n_extra_features = 21;  // noise features padding to 31 variables
  std::size_t no_consent_count = 0;

  std::vector<NumericFeatureParam> numeric_features;  // empty = built-in defaults

  void validate() const;
};

const std::vector<NumericFeatureParam>& default_numeric_features();

struct GeneratedRoster {
  std::string roster_csv;
  std::string schema_csv;
  std::string labels_csv;  // student_id,at_risk ground truth
};

// Deterministic per config: identical configs produce identical bytes.
// Grades and repeat flags are generated so that the default RiskRule
// reproduces the ground-truth labels exactly.
GeneratedRoster generate_roster(const GeneratorConfig& config);

// Writes roster.csv, schema.csv, labels.csv under `dir`.
void write_generated_roster(const GeneratedRoster& roster, const std::string& dir);

}  // namespace riskscreen
