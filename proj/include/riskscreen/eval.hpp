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
#include <memory>
#include <string>
#include <vector>

#include "riskscreen/models.hpp"
#include "riskscreen/resample.hpp"

namespace riskscreen {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool zero_division = false;  // some metric hit a 0/0 and was pinned to 0
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct EvaluationReport {
  ConfusionMatrix cm;
  ClassMetrics at_risk;       // positive class
  ClassMetrics not_at_risk;   // negative class
  double accuracy = 0.0;
  ClassMetrics macro_avg;     // support = total
  ClassMetrics weighted_avg;  // support = total
  std::vector<RocPoint> roc;  // empty when scores were unavailable
  double auc = 0.0;
  bool has_roc = false;

  // Rows: not at-risk, at-risk, Accuracy, Macro Avg, Weighted Avg.
  std::string to_text() const;
  std::string roc_csv() const;  // fpr,tpr,threshold
};

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;
};

// Per-class test counts are round-half-up(class_count * test_fraction);
// within-class selection is a seeded shuffle. Errors if any class would be
// left without training rows.
void stratified_holdout_split(const LabelVector& labels, double test_fraction,
                              std::uint64_t seed,
                              std::vector<std::size_t>& train_indices,
                              std::vector<std::size_t>& test_indices);

// Per-class seeded shuffle dealt round-robin into folds with a cursor shared
// across classes, keeping fold sizes within 1 of each other.
FoldPlan stratified_kfold(const LabelVector& labels, std::size_t k,
                          std::uint64_t seed, WarningSink& warnings);

ConfusionMatrix confusion_matrix(const LabelVector& y_true, const LabelVector& y_pred);

// Fills everything except the ROC fields.
EvaluationReport classification_metrics(const ConfusionMatrix& cm);

// Threshold sweep over distinct scores (descending) with (0,0) and (1,1)
// endpoints; AUC by the trapezoid rule. Errors on single-class y_true.
std::pair<std::vector<RocPoint>, double> roc_auc(const LabelVector& y_true,
                                                 const std::vector<double>& scores);

EvaluationReport evaluate_predictions(const LabelVector& y_true,
                                      const std::vector<double>& scores,
                                      double threshold);

// One classifier plus the preprocessing state it was trained with.
// Standardization is fitted on the original training rows; resampling runs
// in standardized space and scale-insensitive models see the synthetics
// mapped back to raw feature space.
struct PipelineModel {
  std::unique_ptr<TrainedModel> model;
  StandardizationParams std_params;
  SyntheticBatch synthetics;

  std::vector<double> score(const FeatureMatrix& X_raw, WarningSink& warnings) const;
  LabelVector predict(const FeatureMatrix& X_raw, double threshold,
                      WarningSink& warnings) const;
};

PipelineModel train_pipeline_model(const ModelSpec& spec, const FeatureMatrix& X,
                                   const LabelVector& y,
                                   const std::vector<std::size_t>& train_rows,
                                   const ResamplerConfig& resampler,
                                   WarningSink& warnings);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct CrossValidationResult {
  std::vector<EvaluationReport> fold_reports;
  std::map<std::string, MetricSummary> summary;  // accuracy, auc, f1_at_risk, ...

  std::string to_text() const;
};

CrossValidationResult cross_validate(const ModelSpec& spec, const FeatureMatrix& X,
                                     const LabelVector& y, const FoldPlan& plan,
                                     const ResamplerConfig& resampler,
                                     double threshold, WarningSink& warnings);

}  // namespace riskscreen
