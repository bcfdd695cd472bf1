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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "riskscreen/common.hpp"
#include "riskscreen/ingest.hpp"
#include "riskscreen/preprocess.hpp"

namespace riskscreen {

enum class ModelKind { kLogReg, kLinearSvm, kGnb, kKnn, kDTree, kRForest };

const std::string& model_kind_token(ModelKind kind);
std::optional<ModelKind> parse_model_kind(const std::string& token);
// Distance/gradient-based kinds that want standardized inputs.
bool kind_wants_standardized_input(ModelKind kind);

struct LogRegParams {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
};

struct LinearSvmParams {
  double learning_rate = 0.01;
  std::size_t epochs = 1000;
  double l2 = 1e-3;
};

struct GnbParams {
  double var_smoothing = 1e-9;  // times the largest per-feature variance
};

struct KnnParams {
  std::size_t k = 5;
};

struct TreeParams {
  int max_depth = -1;  // -1 = unlimited
  std::size_t min_samples_split = 2;
};

struct ForestParams {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d)), clamped to >= 1
  TreeParams tree;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kLogReg;
  std::uint64_t seed = 0;
  LogRegParams logreg;
  LinearSvmParams svm;
  GnbParams gnb;
  KnnParams knn;
  TreeParams tree;
  ForestParams forest;

  const std::string& id() const { return model_kind_token(kind); }
  void validate() const;
};

// Immutable fitted classifier. Prediction requires the same column names the
// model was trained on.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  ModelKind kind() const { return kind_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  bool wants_standardized_input() const { return standardized_input_; }

  std::vector<double> predict_scores(const FeatureMatrix& X) const;
  LabelVector predict_labels(const FeatureMatrix& X, double threshold = 0.5) const;

  nlohmann::json to_json() const;
  static std::unique_ptr<TrainedModel> from_json(const nlohmann::json& j);

 protected:
  TrainedModel(ModelKind kind, std::vector<std::string> feature_names,
               bool standardized_input)
      : kind_(kind),
        feature_names_(std::move(feature_names)),
        standardized_input_(standardized_input) {}

  virtual std::vector<double> score_rows(const FeatureMatrix& X) const = 0;
  virtual void serialize_params(nlohmann::json& j) const = 0;

 private:
  ModelKind kind_;
  std::vector<std::string> feature_names_;
  bool standardized_input_;
};

std::unique_ptr<TrainedModel> train(const ModelSpec& spec, const FeatureMatrix& X,
                                    const LabelVector& y, WarningSink& warnings);

void save_model(const TrainedModel& model, const std::string& path);
std::unique_ptr<TrainedModel> load_model(const std::string& path);

// --- training primitives, exposed for direct testing ---

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

// Mean cross-entropy + (l2/2)||w||^2; grad = X^T(p - y)/n + l2*w.
LossGradient logreg_loss_gradient(const std::vector<double>& w, double b,
                                  const FeatureMatrix& X, const LabelVector& y,
                                  double l2);

// Mean hinge max(0, 1 - y(w.x + b)) + (l2/2)||w||^2 over labels in {-1,+1}.
LossGradient hinge_subgradient(const std::vector<double>& w, double b,
                               const FeatureMatrix& X,
                               const std::vector<int>& y_pm, double l2);

double gini_impurity(const std::vector<std::size_t>& class_counts);

struct AxisSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// Exhaustive scan over candidate features and midpoints between consecutive
// distinct sorted values. Ties break to the lowest feature index, then the
// lowest threshold. Returns nullopt when no split improves.
std::optional<AxisSplit> best_axis_split(const FeatureMatrix& X,
                                         const std::vector<int>& y,
                                         const std::vector<std::size_t>& rows,
                                         const std::vector<std::size_t>& feature_candidates);

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed);

// Per-feature impurity-decrease importances of a fitted forest, normalized
// to sum to 1. Throws if `model` is not a forest.
std::vector<double> forest_feature_importances(const TrainedModel& model);

}  // namespace riskscreen
