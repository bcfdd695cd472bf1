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
#include "riskscreen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "riskscreen/rng.hpp"

namespace riskscreen {

namespace {

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::vector<std::size_t> class_indices(const LabelVector& labels, int cls) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.labels[i] == cls) idx.push_back(i);
  }
  return idx;
}

std::string fmt(double v, int width = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.4f", width, v);
  return buf;
}

}  // namespace

void stratified_holdout_split(const LabelVector& labels, double test_fraction,
                              std::uint64_t seed,
                              std::vector<std::size_t>& train_indices,
                              std::vector<std::size_t>& test_indices) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("holdout split: test_fraction must lie in (0, 1)");
  }
  train_indices.clear();
  test_indices.clear();
  for (int cls = 0; cls < 2; ++cls) {
    auto idx = class_indices(labels, cls);
    if (idx.empty()) {
      throw DataError("holdout split: class " + std::to_string(cls) + " has no rows");
    }
    const std::size_t n_test =
        round_half_up(static_cast<double>(idx.size()) * test_fraction);
    if (n_test >= idx.size()) {
      throw DataError("holdout split: class " + std::to_string(cls) +
                      " would have no training rows");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(idx);
    test_indices.insert(test_indices.end(), idx.begin(), idx.begin() + n_test);
    train_indices.insert(train_indices.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(train_indices.begin(), train_indices.end());
  std::sort(test_indices.begin(), test_indices.end());
}

FoldPlan stratified_kfold(const LabelVector& labels, std::size_t k,
                          std::uint64_t seed, WarningSink& warnings) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  if (k > labels.size()) {
    throw DataError("kfold: k=" + std::to_string(k) + " exceeds " +
                    std::to_string(labels.size()) + " rows");
  }
  const std::size_t minority =
      std::min(labels.positive_count(), labels.negative_count());
  if (k > minority) {
    warnings.warn("kfold: k=" + std::to_string(k) +
                  " exceeds minority class count " + std::to_string(minority) +
                  "; some folds get no minority rows");
  }
  FoldPlan plan;
  plan.seed = seed;
  plan.folds.assign(k, {});
  // The deal cursor carries across classes so total fold sizes stay balanced.
  std::size_t cursor = 0;
  for (int cls = 0; cls < 2; ++cls) {
    auto idx = class_indices(labels, cls);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(idx);
    for (auto i : idx) {
      plan.folds[cursor % k].push_back(i);
      ++cursor;
    }
  }
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

ConfusionMatrix confusion_matrix(const LabelVector& y_true, const LabelVector& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion_matrix: length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true.labels[i];
    const int p = y_pred.labels[i];
    if (t == 1 && p == 1) ++cm.tp;
    else if (t == 0 && p == 1) ++cm.fp;
    else if (t == 1 && p == 0) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn,
                           std::size_t support) {
  ClassMetrics m;
  m.support = support;
  if (tp + fp == 0) {
    m.precision = 0.0;
    m.zero_division = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall = 0.0;
    m.zero_division = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1 = 0.0;
    m.zero_division = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace

EvaluationReport classification_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("classification_metrics: empty confusion matrix");
  EvaluationReport r;
  r.cm = cm;
  r.at_risk = class_metrics(cm.tp, cm.fp, cm.fn, cm.tp + cm.fn);
  // Negative class metrics are the mirrored matrix.
  r.not_at_risk = class_metrics(cm.tn, cm.fn, cm.fp, cm.tn + cm.fp);
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());

  const double n = static_cast<double>(cm.total());
  const double w_pos = static_cast<double>(r.at_risk.support);
  const double w_neg = static_cast<double>(r.not_at_risk.support);
  r.macro_avg.precision = 0.5 * (r.at_risk.precision + r.not_at_risk.precision);
  r.macro_avg.recall = 0.5 * (r.at_risk.recall + r.not_at_risk.recall);
  r.macro_avg.f1 = 0.5 * (r.at_risk.f1 + r.not_at_risk.f1);
  r.macro_avg.support = cm.total();
  r.weighted_avg.precision =
      (w_pos * r.at_risk.precision + w_neg * r.not_at_risk.precision) / n;
  r.weighted_avg.recall = (w_pos * r.at_risk.recall + w_neg * r.not_at_risk.recall) / n;
  r.weighted_avg.f1 = (w_pos * r.at_risk.f1 + w_neg * r.not_at_risk.f1) / n;
  r.weighted_avg.support = cm.total();
  r.macro_avg.zero_division = r.weighted_avg.zero_division =
      r.at_risk.zero_division || r.not_at_risk.zero_division;
  return r;
}

std::pair<std::vector<RocPoint>, double> roc_auc(const LabelVector& y_true,
                                                 const std::vector<double>& scores) {
  if (y_true.size() != scores.size()) throw DataError("roc_auc: length mismatch");
  const std::size_t pos = y_true.positive_count();
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) {
    throw DataError("roc_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // Tied scores advance as one threshold step.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (y_true.labels[order[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    points.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos,
                      threshold});
  }
  if (points.back().fpr != 1.0 || points.back().tpr != 1.0) {
    points.push_back({1.0, 1.0, -std::numeric_limits<double>::infinity()});
  }

  double auc = 0.0;
  for (std::size_t p = 1; p < points.size(); ++p) {
    auc += (points[p].fpr - points[p - 1].fpr) *
           0.5 * (points[p].tpr + points[p - 1].tpr);
  }
  return {points, auc};
}

EvaluationReport evaluate_predictions(const LabelVector& y_true,
                                      const std::vector<double>& scores,
                                      double threshold) {
  LabelVector y_pred;
  y_pred.labels.reserve(scores.size());
  for (double s : scores) y_pred.labels.push_back(s >= threshold ? 1 : 0);
  auto report = classification_metrics(confusion_matrix(y_true, y_pred));
  const std::size_t pos = y_true.positive_count();
  if (pos > 0 && pos < y_true.size()) {
    auto [points, auc] = roc_auc(y_true, scores);
    report.roc = std::move(points);
    report.auc = auc;
    report.has_roc = true;
  }
  return report;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  out << "              precision    recall  f1-score   support\n";
  auto row = [&](const std::string& label, const ClassMetrics& m) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-12s %10.4f %9.4f %9.4f %9zu\n", label.c_str(),
                  m.precision, m.recall, m.f1, m.support);
    out << buf;
  };
  row("not at-risk", not_at_risk);
  row("at-risk", at_risk);
  {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-12s %30.4f (%zu instances)\n", "Accuracy",
                  accuracy, cm.total());
    out << buf;
  }
  row("Macro Avg", macro_avg);
  row("Weighted Avg", weighted_avg);
  if (has_roc) {
    out << "AUC" << fmt(auc, 38) << "\n";
  }
  if (at_risk.zero_division || not_at_risk.zero_division) {
    out << "note: zero-division metrics pinned to 0\n";
  }
  return out.str();
}

std::string EvaluationReport::roc_csv() const {
  std::ostringstream out;
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", p.fpr, p.tpr, p.threshold);
    out << buf;
  }
  return out.str();
}

std::vector<double> PipelineModel::score(const FeatureMatrix& X_raw,
                                         WarningSink& warnings) const {
  if (model->wants_standardized_input()) {
    return model->predict_scores(standardize(X_raw, std_params, warnings));
  }
  return model->predict_scores(X_raw);
}

LabelVector PipelineModel::predict(const FeatureMatrix& X_raw, double threshold,
                                   WarningSink& warnings) const {
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("predict: threshold must lie in [0,1]");
  }
  const auto scores = score(X_raw, warnings);
  LabelVector y;
  y.labels.reserve(scores.size());
  for (double s : scores) y.labels.push_back(s >= threshold ? 1 : 0);
  return y;
}

PipelineModel train_pipeline_model(const ModelSpec& spec, const FeatureMatrix& X,
                                   const LabelVector& y,
                                   const std::vector<std::size_t>& train_rows,
                                   const ResamplerConfig& resampler,
                                   WarningSink& warnings) {
  PipelineModel out;
  auto X_train = X.select_rows(train_rows);
  LabelVector y_train;
  for (auto r : train_rows) y_train.labels.push_back(y.labels[r]);

  out.std_params = fit_standardization(X, train_rows);
  auto X_train_std = standardize(X_train, out.std_params, warnings);

  // Resampling runs in standardized space so Euclidean distances are
  // scale-free.
  auto resampled = resample_training_set(X_train_std, y_train, resampler, warnings);
  out.synthetics = resampled.batch;

  if (kind_wants_standardized_input(spec.kind)) {
    out.model = train(spec, resampled.X, resampled.y, warnings);
  } else {
    auto X_aug = X_train;
    for (const auto& s : resampled.batch.samples) {
      X_aug.append_row(destandardize_row(s.values, out.std_params));
    }
    out.model = train(spec, X_aug, resampled.y, warnings);
  }
  return out;
}

CrossValidationResult cross_validate(const ModelSpec& spec, const FeatureMatrix& X,
                                     const LabelVector& y, const FoldPlan& plan,
                                     const ResamplerConfig& resampler,
                                     double threshold, WarningSink& warnings) {
  CrossValidationResult result;
  std::map<std::string, std::vector<double>> metric_values;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<std::uint8_t> in_fold(X.rows(), 0);
    for (auto i : plan.folds[f]) in_fold[i] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      if (!in_fold[i]) train_rows.push_back(i);
    }

    std::size_t train_pos = 0;
    for (auto r : train_rows) train_pos += static_cast<std::size_t>(y.labels[r]);
    if (train_pos == 0 || train_pos == train_rows.size()) {
      throw DataError("cross_validate: fold " + std::to_string(f + 1) +
                      " leaves a single-class training set");
    }

    auto fitted = train_pipeline_model(spec, X, y, train_rows, resampler, warnings);
    auto X_test = X.select_rows(plan.folds[f]);
    LabelVector y_test;
    for (auto i : plan.folds[f]) y_test.labels.push_back(y.labels[i]);

    const auto scores = fitted.score(X_test, warnings);
    LabelVector y_pred;
    for (double s : scores) y_pred.labels.push_back(s >= threshold ? 1 : 0);
    auto report = classification_metrics(confusion_matrix(y_test, y_pred));
    const std::size_t pos = y_test.positive_count();
    if (pos > 0 && pos < y_test.size()) {
      auto [points, auc] = roc_auc(y_test, scores);
      report.roc = std::move(points);
      report.auc = auc;
      report.has_roc = true;
      metric_values["auc"].push_back(auc);
    }
    metric_values["accuracy"].push_back(report.accuracy);
    metric_values["precision_at_risk"].push_back(report.at_risk.precision);
    metric_values["recall_at_risk"].push_back(report.at_risk.recall);
    metric_values["f1_at_risk"].push_back(report.at_risk.f1);
    metric_values["macro_f1"].push_back(report.macro_avg.f1);
    result.fold_reports.push_back(std::move(report));
  }

  for (const auto& [name, values] : metric_values) {
    MetricSummary s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    result.summary[name] = s;
  }
  return result;
}

std::string CrossValidationResult::to_text() const {
  std::ostringstream out;
  out << "metric,mean,std,folds\n";
  for (const auto& [name, s] : summary) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%zu\n", name.c_str(), s.mean,
                  s.stddev, fold_reports.size());
    out << buf;
  }
  return out.str();
}

}  // namespace riskscreen
