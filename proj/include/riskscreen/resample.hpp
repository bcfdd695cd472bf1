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

#include "riskscreen/common.hpp"
#include "riskscreen/ingest.hpp"
#include "riskscreen/preprocess.hpp"

namespace riskscreen {

enum class ResampleMethod { kNone, kSmote, kAdasyn };

const std::string& resample_method_token(ResampleMethod m);
std::optional<ResampleMethod> parse_resample_method(const std::string& token);

struct ResamplerConfig {
  ResampleMethod method = ResampleMethod::kNone;
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;  // minority/majority after resampling
  double beta = 1.0;          // ADASYN balance level
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticSample {
  std::vector<double> values;
  std::size_t seed_row = 0;      // row index in the input matrix
  std::size_t neighbor_row = 0;  // row index in the input matrix
  double lambda = 0.0;           // values = seed + lambda * (neighbor - seed)
};

struct SyntheticBatch {
  std::vector<SyntheticSample> samples;

  // CSV: sample_index,seed_row,neighbor_row,lambda
  std::string provenance_csv() const;
};

// k nearest others (Euclidean) for every point; distance ties break by
// ascending index. Errors when fewer than k+1 points.
std::vector<std::vector<std::size_t>> nearest_neighbors(
    const std::vector<std::vector<double>>& points, std::size_t k);

// SMOTE over the minority rows of (X, y). Synthetic count is
// round(target_ratio * majority) - minority, floored at 0. Seed points
// rotate round-robin over minority rows; the neighbor is uniform among the
// k nearest minority neighbors; lambda ~ U[0,1].
SyntheticBatch smote_oversample(const FeatureMatrix& X, const LabelVector& y,
                                const ResamplerConfig& config);

// ADASYN: G = round((majority - minority) * beta) synthetics, allocated per
// minority point proportionally to its majority-neighbor fraction among the
// k nearest neighbors in the full set. Interpolation neighbors come from the
// minority class. If no minority point borders the majority class the
// allocation falls back to uniform with a warning.
SyntheticBatch adasyn_oversample(const FeatureMatrix& X, const LabelVector& y,
                                 const ResamplerConfig& config,
                                 WarningSink& warnings);

struct ResampledSet {
  FeatureMatrix X;  // original rows, then synthetics
  LabelVector y;
  SyntheticBatch batch;
};

// Applies the configured method to a training set; method kNone passes
// through unchanged.
ResampledSet resample_training_set(const FeatureMatrix& X_train,
                                   const LabelVector& y_train,
                                   const ResamplerConfig& config,
                                   WarningSink& warnings);

}  // namespace riskscreen
