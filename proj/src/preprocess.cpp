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
#include "riskscreen/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace riskscreen {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::vector<ColumnMeta> columns)
    : rows_(rows), columns_(std::move(columns)) {
  values_.assign(rows_ * columns_.size(), 0.0);
}

bool FeatureMatrix::is_missing(std::size_t r, std::size_t c) const {
  if (missing_.empty()) return false;
  return missing_[r * cols() + c] != 0;
}

void FeatureMatrix::set_missing(std::size_t r, std::size_t c, bool missing) {
  if (missing_.empty()) {
    if (!missing) return;
    missing_.assign(rows_ * cols(), 0);
  }
  missing_[r * cols() + c] = missing ? 1 : 0;
}

bool FeatureMatrix::has_missing() const { return missing_count() > 0; }

std::size_t FeatureMatrix::missing_count() const {
  std::size_t n = 0;
  for (auto m : missing_) n += m;
  return n;
}

std::optional<std::size_t> FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name == name) return c;
  }
  return std::nullopt;
}

std::vector<double> FeatureMatrix::column_values(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

std::vector<double> FeatureMatrix::row_values(std::size_t r) const {
  std::vector<double> out(cols());
  for (std::size_t c = 0; c < cols(); ++c) out[c] = at(r, c);
  return out;
}

void FeatureMatrix::set_row(std::size_t r, const std::vector<double>& values) {
  if (values.size() != cols()) throw DataError("set_row: width mismatch");
  for (std::size_t c = 0; c < cols(); ++c) at(r, c) = values[c];
}

void FeatureMatrix::append_row(const std::vector<double>& values) {
  if (values.size() != cols()) throw DataError("append_row: width mismatch");
  values_.insert(values_.end(), values.begin(), values.end());
  if (!missing_.empty()) missing_.insert(missing_.end(), cols(), 0);
  ++rows_;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::size_t>& indices) const {
  std::vector<ColumnMeta> meta;
  meta.reserve(indices.size());
  for (auto i : indices) meta.push_back(columns_[i]);
  FeatureMatrix out(rows_, std::move(meta));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < indices.size(); ++j) {
      out.at(r, j) = at(r, indices[j]);
      if (is_missing(r, indices[j])) out.set_missing(r, j, true);
    }
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& indices) const {
  FeatureMatrix out(indices.size(), columns_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t c = 0; c < cols(); ++c) {
      out.at(i, c) = at(indices[i], c);
      if (is_missing(indices[i], c)) out.set_missing(i, c, true);
    }
  }
  return out;
}

namespace {

std::optional<double> parse_cell_numeric(const std::string& raw) {
  std::string s;
  for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "true" || s == "yes") return 1.0;
  if (s == "false" || s == "no") return 0.0;
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0') return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

void FeatureEncoder::fit(const Roster& roster, const SidecarSchema& schema) {
  if (roster.records.empty()) throw DataError("encoder: cannot fit on empty roster");
  specs_.clear();
  for (std::size_t f = 0; f < roster.feature_names.size(); ++f) {
    FeatureSpec spec;
    spec.name = roster.feature_names[f];
    if (const auto* entry = schema.find(spec.name)) {
      spec.category = entry->category;
    }
    bool all_numeric = true;
    std::set<std::string> observed;
    for (const auto& rec : roster.records) {
      const auto& cell = rec.features[f];
      if (!cell) continue;
      if (!parse_cell_numeric(*cell)) all_numeric = false;
      observed.insert(*cell);
    }
    spec.numeric = all_numeric;
    if (!all_numeric) {
      if (observed.size() > kMaxCategories) {
        throw DataError("encoder: column '" + spec.name + "' has " +
                        std::to_string(observed.size()) +
                        " distinct categories (limit " + std::to_string(kMaxCategories) +
                        "); looks like an identifier column");
      }
      spec.categories.assign(observed.begin(), observed.end());  // lexicographic
    }
    specs_.push_back(std::move(spec));
  }
  fitted_ = true;
}

FeatureMatrix FeatureEncoder::transform(const Roster& roster, WarningSink& warnings) const {
  if (!fitted_) throw DataError("encoder: transform before fit");
  std::vector<std::size_t> source_col(specs_.size());
  for (std::size_t f = 0; f < specs_.size(); ++f) {
    auto it = std::find(roster.feature_names.begin(), roster.feature_names.end(),
                        specs_[f].name);
    if (it == roster.feature_names.end()) {
      throw DataError("encoder: roster is missing fitted feature '" + specs_[f].name + "'");
    }
    source_col[f] = static_cast<std::size_t>(it - roster.feature_names.begin());
  }

  std::vector<ColumnMeta> meta;
  for (const auto& spec : specs_) {
    if (spec.numeric) {
      ColumnMeta m;
      m.name = spec.name;
      m.source_feature = spec.name;
      m.origin = ColumnMeta::Origin::kRaw;
      m.category = spec.category;
      meta.push_back(std::move(m));
    } else {
      for (const auto& cat : spec.categories) {
        ColumnMeta m;
        m.name = spec.name + "=" + cat;
        m.source_feature = spec.name;
        m.origin = ColumnMeta::Origin::kOneHot;
        m.category_value = cat;
        m.category = spec.category;
        meta.push_back(std::move(m));
      }
    }
  }

  FeatureMatrix out(roster.records.size(), std::move(meta));
  for (std::size_t r = 0; r < roster.records.size(); ++r) {
    std::size_t c = 0;
    for (std::size_t f = 0; f < specs_.size(); ++f) {
      const auto& spec = specs_[f];
      const auto& cell = roster.records[r].features[source_col[f]];
      if (spec.numeric) {
        if (!cell) {
          out.set_missing(r, c, true);
        } else {
          auto v = parse_cell_numeric(*cell);
          if (!v) {
            throw DataError("encoder: non-numeric value '" + *cell +
                            "' in numeric column '" + spec.name + "'");
          }
          out.at(r, c) = *v;
        }
        ++c;
      } else {
        bool matched = false;
        for (std::size_t k = 0; k < spec.categories.size(); ++k) {
          if (!cell) {
            out.set_missing(r, c + k, true);
          } else if (*cell == spec.categories[k]) {
            out.at(r, c + k) = 1.0;
            matched = true;
          }
        }
        if (cell && !matched) {
          warnings.warn("encoder: unseen category '" + *cell + "' in column '" +
                        spec.name + "'; emitting all-zero one-hot row");
        }
        c += spec.categories.size();
      }
    }
  }
  return out;
}

FeatureEncoder FeatureEncoder::restricted(
    const std::vector<std::string>& source_features) const {
  if (!fitted_) throw DataError("encoder: restricted before fit");
  FeatureEncoder out;
  for (const auto& spec : specs_) {
    if (std::find(source_features.begin(), source_features.end(), spec.name) !=
        source_features.end()) {
      out.specs_.push_back(spec);
    }
  }
  if (out.specs_.empty()) throw DataError("encoder: restriction matches no features");
  out.fitted_ = true;
  return out;
}

nlohmann::json FeatureEncoder::to_json() const {
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : specs_) {
    specs.push_back({{"name", s.name},
                     {"numeric", s.numeric},
                     {"categories", s.categories},
                     {"category", category_token(s.category)}});
  }
  return {{"specs", std::move(specs)}};
}

FeatureEncoder FeatureEncoder::from_json(const nlohmann::json& j) {
  FeatureEncoder enc;
  for (const auto& s : j.at("specs")) {
    FeatureSpec spec;
    spec.name = s.at("name").get<std::string>();
    spec.numeric = s.at("numeric").get<bool>();
    spec.categories = s.at("categories").get<std::vector<std::string>>();
    auto cat = parse_category(s.at("category").get<std::string>());
    if (!cat) throw DataError("encoder json: bad category token");
    spec.category = *cat;
    enc.specs_.push_back(std::move(spec));
  }
  enc.fitted_ = true;
  return enc;
}

FeatureMatrix encode_features(const Roster& roster, const SidecarSchema& schema,
                              WarningSink& warnings) {
  FeatureEncoder enc;
  enc.fit(roster, schema);
  return enc.transform(roster, warnings);
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of empty vector");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::size_t ImputationReport::total_filled() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.count_filled;
  return n;
}

std::string ImputationReport::to_text() const {
  std::ostringstream out;
  out << "column,strategy,fill_value,count_filled\n";
  for (const auto& e : entries) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", e.fill_value);
    out << e.column << "," << e.strategy << "," << buf << "," << e.count_filled << "\n";
  }
  return out.str();
}

ImputationReport impute_missing(FeatureMatrix& matrix) {
  ImputationReport report;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    std::vector<double> observed;
    std::size_t missing = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      if (matrix.is_missing(r, c)) {
        ++missing;
      } else {
        observed.push_back(matrix.at(r, c));
      }
    }
    if (observed.empty()) {
      throw DataError("imputation: column '" + matrix.column(c).name +
                      "' has no observed values");
    }
    ImputationReport::Entry entry;
    entry.column = matrix.column(c).name;
    entry.count_filled = missing;
    if (matrix.column(c).origin == ColumnMeta::Origin::kOneHot) {
      entry.strategy = "mode";
      std::size_t ones = 0;
      for (double v : observed) ones += (v != 0.0);
      entry.fill_value = (2 * ones > observed.size()) ? 1.0 : 0.0;
    } else {
      entry.strategy = "median";
      entry.fill_value = median(observed);
    }
    if (missing > 0) {
      for (std::size_t r = 0; r < matrix.rows(); ++r) {
        if (matrix.is_missing(r, c)) {
          matrix.at(r, c) = entry.fill_value;
          matrix.set_missing(r, c, false);
        }
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

StandardizationParams fit_standardization(const FeatureMatrix& matrix,
                                          const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DataError("standardization: no rows to fit on");
  StandardizationParams params;
  params.fitted_on_rows = rows;
  params.mean.resize(matrix.cols());
  params.stddev.resize(matrix.cols());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    double sum = 0.0;
    for (auto r : rows) sum += matrix.at(r, c);
    const double mu = sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (auto r : rows) {
      const double d = matrix.at(r, c) - mu;
      ss += d * d;
    }
    params.mean[c] = mu;
    params.stddev[c] = std::sqrt(ss / static_cast<double>(rows.size()));
  }
  return params;
}

FeatureMatrix standardize(const FeatureMatrix& matrix,
                          const StandardizationParams& params,
                          WarningSink& warnings) {
  if (params.mean.size() != matrix.cols()) {
    throw DataError("standardization: parameter width mismatch");
  }
  if (matrix.has_missing()) {
    throw DataError("standardization: matrix still has missing values");
  }
  FeatureMatrix out(matrix.rows(), matrix.columns());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (params.stddev[c] == 0.0) {
      warnings.warn("standardization: column '" + matrix.column(c).name +
                    "' is constant; mapped to zeros");
      continue;  // leaves the column all-zero
    }
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      out.at(r, c) = (matrix.at(r, c) - params.mean[c]) / params.stddev[c];
    }
  }
  return out;
}

std::vector<double> destandardize_row(const std::vector<double>& row,
                                      const StandardizationParams& params) {
  if (row.size() != params.mean.size()) {
    throw DataError("destandardize: width mismatch");
  }
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    out[c] = (params.stddev[c] == 0.0) ? params.mean[c]
                                       : row[c] * params.stddev[c] + params.mean[c];
  }
  return out;
}

}  // namespace riskscreen
