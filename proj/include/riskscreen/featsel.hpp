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

#include <string>
#include <vector>

#include "riskscreen/ingest.hpp"
#include "riskscreen/models.hpp"
#include "riskscreen/preprocess.hpp"

namespace riskscreen {

enum class RankingMethod { kCorrelation, kForestImportance };

const std::string& ranking_method_token(RankingMethod m);

struct RankedFeature {
  std::string feature;
  double score = 0.0;
  bool degenerate = false;  // constant column or single-class labels
};

struct FeatureRanking {
  RankingMethod method = RankingMethod::kCorrelation;
  std::vector<RankedFeature> entries;  // sorted best-first

  std::string to_csv() const;  // rank,feature,score,method
};

struct FeatureSubset {
  std::vector<std::string> features;  // in rank order
  RankingMethod method = RankingMethod::kCorrelation;
  std::vector<RankedFeature> provenance;
};

struct CorrelationResult {
  double value = 0.0;
  bool degenerate = false;
};

// Pearson correlation of a numeric column against 0/1 labels. A constant
// column or single-class labels yield score 0 with the degenerate marker.
CorrelationResult point_biserial_correlation(const std::vector<double>& column,
                                             const LabelVector& labels);

// Ranking over all columns by |r| descending; ties by ascending name;
// degenerate columns last. Throws if every column is degenerate.
FeatureRanking rank_by_correlation(const FeatureMatrix& matrix,
                                   const LabelVector& labels);

// Mean-decrease-in-impurity ranking from a seeded forest fit.
FeatureRanking forest_importance(const FeatureMatrix& matrix, const LabelVector& labels,
                                 const ForestParams& config, std::uint64_t seed);

FeatureSubset select_top_k(const FeatureRanking& ranking, std::size_t k);

}  // namespace riskscreen
