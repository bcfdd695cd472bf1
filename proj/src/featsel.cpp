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
#include "riskscreen/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace riskscreen {

const std::string& ranking_method_token(RankingMethod m) {
  static const std::string corr = "correlation", imp = "forest_importance";
  return m == RankingMethod::kCorrelation ? corr : imp;
}

std::string FeatureRanking::to_csv() const {
  std::ostringstream out;
  out << "rank,feature,score,method\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", entries[i].score);
    out << (i + 1) << "," << entries[i].feature << "," << buf << ","
        << ranking_method_token(method) << "\n";
  }
  return out.str();
}

CorrelationResult point_biserial_correlation(const std::vector<double>& column,
                                             const LabelVector& labels) {
  if (column.size() != labels.size() || column.empty()) {
    throw DataError("correlation: column/labels length mismatch");
  }
  const std::size_t n = column.size();
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += column[i];
    mean_y += labels.labels[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = column[i] - mean_x;
    const double dy = labels.labels[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, false};
}

namespace {

void sort_ranking(std::vector<RankedFeature>& entries, bool by_abs) {
  std::stable_sort(entries.begin(), entries.end(),
                   [by_abs](const RankedFeature& a, const RankedFeature& b) {
                     if (a.degenerate != b.degenerate) return b.degenerate;
                     const double sa = by_abs ? std::fabs(a.score) : a.score;
                     const double sb = by_abs ? std::fabs(b.score) : b.score;
                     if (sa != sb) return sa > sb;
                     return a.feature < b.feature;
                   });
}

}  // namespace

FeatureRanking rank_by_correlation(const FeatureMatrix& matrix,
                                   const LabelVector& labels) {
  if (matrix.cols() == 0) throw DataError("rank_by_correlation: no columns");
  FeatureRanking ranking;
  ranking.method = RankingMethod::kCorrelation;
  bool any_ok = false;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    auto r = point_biserial_correlation(matrix.column_values(c), labels);
    ranking.entries.push_back({matrix.column(c).name, r.value, r.degenerate});
    any_ok = any_ok || !r.degenerate;
  }
  if (!any_ok) throw DataError("rank_by_correlation: every column is degenerate");
  sort_ranking(ranking.entries, /*by_abs=*/true);
  return ranking;
}

FeatureRanking forest_importance(const FeatureMatrix& matrix, const LabelVector& labels,
                                 const ForestParams& config, std::uint64_t seed) {
  const auto pos = labels.positive_count();
  if (pos == 0 || pos == labels.size()) {
    throw DataError("forest_importance: labels contain a single class");
  }
  ModelSpec spec;
  spec.kind = ModelKind::kRForest;
  spec.seed = seed;
  spec.forest = config;
  WarningSink warnings;
  auto model = train(spec, matrix, labels, warnings);
  auto importances = forest_feature_importances(*model);

  FeatureRanking ranking;
  ranking.method = RankingMethod::kForestImportance;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    ranking.entries.push_back({matrix.column(c).name, importances[c], false});
  }
  sort_ranking(ranking.entries, /*by_abs=*/false);
  return ranking;
}

FeatureSubset select_top_k(const FeatureRanking& ranking, std::size_t k) {
  if (k < 1 || k > ranking.entries.size()) {
    throw ConfigError("select_top_k: k=" + std::to_string(k) +
                      " out of range [1, " + std::to_string(ranking.entries.size()) + "]");
  }
  FeatureSubset subset;
  subset.method = ranking.method;
  subset.provenance.assign(ranking.entries.begin(), ranking.entries.begin() + k);
  for (const auto& e : subset.provenance) subset.features.push_back(e.feature);
  return subset;
}

}  // namespace riskscreen
