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
#include "riskscreen/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "riskscreen/rng.hpp"

namespace riskscreen {

const std::string& resample_method_token(ResampleMethod m) {
  static const std::string tokens[] = {"none", "smote", "adasyn"};
  return tokens[static_cast<int>(m)];
}

std::optional<ResampleMethod> parse_resample_method(const std::string& token) {
  for (int i = 0; i < 3; ++i) {
    auto m = static_cast<ResampleMethod>(i);
    if (resample_method_token(m) == token) return m;
  }
  return std::nullopt;
}

void ResamplerConfig::validate() const {
  if (k_neighbors < 1) throw ConfigError("resampler: k_neighbors >= 1 required");
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw ConfigError("resampler: target_ratio must lie in (0, 1]");
  }
  if (beta < 0.0 || beta > 1.0) throw ConfigError("resampler: beta must lie in [0, 1]");
}

std::string SyntheticBatch::provenance_csv() const {
  std::ostringstream out;
  out << "sample_index,seed_row,neighbor_row,lambda\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", samples[i].lambda);
    out << i << "," << samples[i].seed_row << "," << samples[i].neighbor_row << ","
        << buf << "\n";
  }
  return out.str();
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return d2;
}

std::vector<std::size_t> minority_indices(const LabelVector& y) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y.labels[i] == 1) idx.push_back(i);
  }
  return idx;
}

SyntheticSample interpolate(const FeatureMatrix& X, std::size_t seed_row,
                            std::size_t neighbor_row, double lambda) {
  SyntheticSample s;
  s.seed_row = seed_row;
  s.neighbor_row = neighbor_row;
  s.lambda = lambda;
  s.values.resize(X.cols());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    const double a = X.at(seed_row, c);
    const double b = X.at(neighbor_row, c);
    s.values[c] = a + lambda * (b - a);
  }
  return s;
}

}  // namespace

std::vector<std::vector<std::size_t>> nearest_neighbors(
    const std::vector<std::vector<double>>& points, std::size_t k) {
  const std::size_t n = points.size();
  if (n < k + 1) {
    throw DataError("nearest_neighbors: need at least k+1=" + std::to_string(k + 1) +
                    " points, got " + std::to_string(n));
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(squared_distance(points[i], points[j]), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    out[i].reserve(k);
    for (std::size_t j = 0; j < k; ++j) out[i].push_back(dist[j].second);
  }
  return out;
}

SyntheticBatch smote_oversample(const FeatureMatrix& X, const LabelVector& y,
                                const ResamplerConfig& config) {
  config.validate();
  if (y.size() != X.rows()) throw DataError("smote: labels/rows mismatch");
  const auto minority = minority_indices(y);
  const std::size_t m_min = minority.size();
  const std::size_t m_maj = y.size() - m_min;
  if (m_min < 2) {
    throw DataError("smote: minority class has " + std::to_string(m_min) +
                    " rows; need at least 2");
  }
  const long long wanted =
      std::llround(config.target_ratio * static_cast<double>(m_maj)) -
      static_cast<long long>(m_min);
  const std::size_t needed = wanted > 0 ? static_cast<std::size_t>(wanted) : 0;

  SyntheticBatch batch;
  if (needed == 0) return batch;

  const std::size_t k = std::min(config.k_neighbors, m_min - 1);
  std::vector<std::vector<double>> points;
  points.reserve(m_min);
  for (auto r : minority) points.push_back(X.row_values(r));
  const auto neighbors = nearest_neighbors(points, k);

  Rng rng(config.seed);
  batch.samples.reserve(needed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t seed_local = s % m_min;  // round-robin over minority rows
    const std::size_t nn_local = neighbors[seed_local][rng.below(k)];
    const double lambda = rng.uniform();
    batch.samples.push_back(
        interpolate(X, minority[seed_local], minority[nn_local], lambda));
  }
  return batch;
}

SyntheticBatch adasyn_oversample(const FeatureMatrix& X, const LabelVector& y,
                                 const ResamplerConfig& config,
                                 WarningSink& warnings) {
  config.validate();
  if (y.size() != X.rows()) throw DataError("adasyn: labels/rows mismatch");
  const auto minority = minority_indices(y);
  const std::size_t m_min = minority.size();
  const std::size_t m_maj = y.size() - m_min;
  if (m_min < 2) {
    throw DataError("adasyn: minority class has " + std::to_string(m_min) +
                    " rows; need at least 2");
  }
  if (m_maj == 0) throw DataError("adasyn: majority class is empty");

  const long long g_total = std::llround(
      static_cast<double>(m_maj - std::min(m_maj, m_min)) * config.beta);

  SyntheticBatch batch;
  if (g_total <= 0) return batch;

  // Majority fraction among k nearest neighbors in the full set.
  const std::size_t k_full = std::min(config.k_neighbors, X.rows() - 1);
  std::vector<std::vector<double>> all_points;
  all_points.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) all_points.push_back(X.row_values(r));
  const auto full_neighbors = nearest_neighbors(all_points, k_full);

  std::vector<double> ratio(m_min, 0.0);
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < m_min; ++i) {
    std::size_t majority_count = 0;
    for (auto nn : full_neighbors[minority[i]]) {
      if (y.labels[nn] == 0) ++majority_count;
    }
    ratio[i] = static_cast<double>(majority_count) / static_cast<double>(k_full);
    ratio_sum += ratio[i];
  }

  std::vector<std::size_t> alloc(m_min, 0);
  if (ratio_sum == 0.0) {
    warnings.warn("adasyn: no minority point borders the majority class; "
                  "falling back to uniform allocation");
    const std::size_t base = static_cast<std::size_t>(g_total) / m_min;
    const std::size_t extra = static_cast<std::size_t>(g_total) % m_min;
    for (std::size_t i = 0; i < m_min; ++i) alloc[i] = base + (i < extra ? 1 : 0);
  } else {
    for (std::size_t i = 0; i < m_min; ++i) {
      alloc[i] = static_cast<std::size_t>(
          std::llround(ratio[i] / ratio_sum * static_cast<double>(g_total)));
    }
  }

  // Interpolation neighbors come from the minority class only.
  const std::size_t k_min = std::min(config.k_neighbors, m_min - 1);
  std::vector<std::vector<double>> min_points;
  min_points.reserve(m_min);
  for (auto r : minority) min_points.push_back(X.row_values(r));
  const auto min_neighbors = nearest_neighbors(min_points, k_min);

  Rng rng(config.seed);
  for (std::size_t i = 0; i < m_min; ++i) {
    for (std::size_t s = 0; s < alloc[i]; ++s) {
      const std::size_t nn_local = min_neighbors[i][rng.below(k_min)];
      const double lambda = rng.uniform();
      batch.samples.push_back(interpolate(X, minority[i], minority[nn_local], lambda));
    }
  }
  return batch;
}

ResampledSet resample_training_set(const FeatureMatrix& X_train,
                                   const LabelVector& y_train,
                                   const ResamplerConfig& config,
                                   WarningSink& warnings) {
  ResampledSet out;
  out.X = X_train;
  out.y = y_train;
  if (config.method == ResampleMethod::kNone) return out;
  if (config.method == ResampleMethod::kSmote) {
    out.batch = smote_oversample(X_train, y_train, config);
  } else {
    out.batch = adasyn_oversample(X_train, y_train, config, warnings);
  }
  for (const auto& s : out.batch.samples) {
    out.X.append_row(s.values);
    out.y.labels.push_back(1);
  }
  return out;
}

}  // namespace riskscreen
