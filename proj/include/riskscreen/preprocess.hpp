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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "riskscreen/common.hpp"
#include "riskscreen/ingest.hpp"

namespace riskscreen {

struct ColumnMeta {
  enum class Origin { kRaw, kOneHot };

  std::string name;            // "GPA" or "Program Action=PROBATION"
  std::string source_feature;  // roster column this came from
  Origin origin = Origin::kRaw;
  std::string category_value;  // one-hot only
  FeatureCategory category = FeatureCategory::kDemographic;
};

// Row-major numeric grid with per-column metadata and an optional
// missing mask (present until imputation).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::vector<ColumnMeta> columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }

  bool is_missing(std::size_t r, std::size_t c) const;
  void set_missing(std::size_t r, std::size_t c, bool missing);
  bool has_missing() const;
  std::size_t missing_count() const;

  const std::vector<ColumnMeta>& columns() const { return columns_; }
  const ColumnMeta& column(std::size_t c) const { return columns_[c]; }
  std::optional<std::size_t> column_index(const std::string& name) const;

  std::vector<double> column_values(std::size_t c) const;
  std::vector<double> row_values(std::size_t r) const;
  void set_row(std::size_t r, const std::vector<double>& values);
  void append_row(const std::vector<double>& values);

  FeatureMatrix select_columns(const std::vector<std::size_t>& indices) const;
  FeatureMatrix select_rows(const std::vector<std::size_t>& indices) const;

 private:
  std::size_t rows_ = 0;
  std::vector<ColumnMeta> columns_;
  std::vector<double> values_;
  std::vector<std::uint8_t> missing_;  // empty once fully imputed
};

// Learns the numeric/categorical split and category vocabularies on a
// training roster, then maps any roster with the same feature columns onto
// a numeric matrix. Unseen categories at transform time become an all-zero
// one-hot group plus a warning.
class FeatureEncoder {
 public:
  static constexpr std::size_t kMaxCategories = 64;

  void fit(const Roster& roster, const SidecarSchema& schema);
  // Matches fitted features to roster columns by name; extra roster columns
  // are ignored, a missing fitted feature is an error.
  FeatureMatrix transform(const Roster& roster, WarningSink& warnings) const;
  bool fitted() const { return fitted_; }

  // Encoder for a subset of the fitted features (phase-restricted models).
  FeatureEncoder restricted(const std::vector<std::string>& source_features) const;

  nlohmann::json to_json() const;
  static FeatureEncoder from_json(const nlohmann::json& j);

 private:
  struct FeatureSpec {
    std::string name;
    bool numeric = false;
    std::vector<std::string> categories;  // lexicographic, categorical only
    FeatureCategory category = FeatureCategory::kDemographic;
  };
  std::vector<FeatureSpec> specs_;
  bool fitted_ = false;
};

// fit + transform on the same roster.
FeatureMatrix encode_features(const Roster& roster, const SidecarSchema& schema,
                              WarningSink& warnings);

struct ImputationReport {
  struct Entry {
    std::string column;
    std::string strategy;  // "median" | "mode"
    double fill_value = 0.0;
    std::size_t count_filled = 0;
  };
  std::vector<Entry> entries;

  std::size_t total_filled() const;
  std::string to_text() const;
};

// Numeric columns: median of observed values (average of the two middle
// order statistics). One-hot columns: mode. All-missing column is an error.
ImputationReport impute_missing(FeatureMatrix& matrix);

struct StandardizationParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // population
  std::vector<std::size_t> fitted_on_rows;
};

StandardizationParams fit_standardization(const FeatureMatrix& matrix,
                                          const std::vector<std::size_t>& rows);
// z = (x - mu)/sigma; sigma = 0 columns map to all-zeros with a warning.
FeatureMatrix standardize(const FeatureMatrix& matrix,
                          const StandardizationParams& params,
                          WarningSink& warnings);
// Inverse transform for rows generated in standardized space.
std::vector<double> destandardize_row(const std::vector<double>& row,
                                      const StandardizationParams& params);

double median(std::vector<double> values);

}  // namespace riskscreen
