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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "riskscreen/eval.hpp"
#include "riskscreen/rng.hpp"

using namespace riskscreen;

namespace {

FeatureMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  std::vector<ColumnMeta> metas(rows[0].size());
  for (std::size_t c = 0; c < metas.size(); ++c) {
    metas[c].name = "f" + std::to_string(c);
    metas[c].source_feature = metas[c].name;
  }
  FeatureMatrix X(rows.size(), metas);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) X.at(r, c) = rows[r][c];
  }
  return X;
}

LabelVector imbalance_21_98(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(119, 0);
  for (int i = 0; i < 21; ++i) y[i] = 1;
  rng.shuffle(y);
  return LabelVector{y};
}

}  // namespace

TEST_CASE("holdout: 98/21 at 0.2 gives 20 neg + 4 pos test, 95 train") {
  auto y = imbalance_21_98(51);
  std::vector<std::size_t> train, test;
  stratified_holdout_split(y, 0.2, 7, train, test);
  CHECK(train.size() == 95);
  CHECK(test.size() == 24);
  std::size_t pos = 0;
  for (auto i : test) pos += static_cast<std::size_t>(y.labels[i]);
  CHECK(pos == 4);  // round-half-up(21 * 0.2) = round(4.2) = 4
}

TEST_CASE("holdout: exact division and determinism") {
  Rng rng(52);
  std::vector<int> labels(200, 0);
  for (int i = 0; i < 100; ++i) labels[i] = 1;
  rng.shuffle(labels);
  LabelVector y{labels};
  std::vector<std::size_t> tr1, te1, tr2, te2;
  stratified_holdout_split(y, 0.2, 11, tr1, te1);
  stratified_holdout_split(y, 0.2, 11, tr2, te2);
  CHECK(te1.size() == 40);
  std::size_t pos = 0;
  for (auto i : te1) pos += static_cast<std::size_t>(y.labels[i]);
  CHECK(pos == 20);
  CHECK(tr1 == tr2);
  CHECK(te1 == te2);
}

TEST_CASE("holdout: emptying a class is an error") {
  LabelVector y{{1, 0, 0, 0}};
  std::vector<std::size_t> train, test;
  CHECK_THROWS_AS(stratified_holdout_split(y, 0.5, 1, train, test), DataError);
}

TEST_CASE("kfold: 119 rows, k=10 gives fold sizes {11,12}") {
  auto y = imbalance_21_98(53);
  WarningSink w;
  auto plan = stratified_kfold(y, 10, 3, w);
  std::multiset<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.insert(f.size());
  CHECK(sizes == std::multiset<std::size_t>{11, 12, 12, 12, 12, 12, 12, 12, 12, 12});
}

TEST_CASE("kfold: perfect stratification at k=2 on [1,1,0,0]") {
  LabelVector y{{1, 1, 0, 0}};
  WarningSink w;
  auto plan = stratified_kfold(y, 2, 1, w);
  for (const auto& f : plan.folds) {
    REQUIRE(f.size() == 2);
    CHECK(y.labels[f[0]] + y.labels[f[1]] == 1);
  }
}

TEST_CASE("kfold: k<2 is config error, k>n is data error, k>minority warns") {
  LabelVector y{{1, 0, 1, 0}};
  WarningSink w;
  CHECK_THROWS_AS(stratified_kfold(y, 1, 1, w), ConfigError);
  CHECK_THROWS_AS(stratified_kfold(y, 5, 1, w), DataError);
  WarningSink w2;
  stratified_kfold(y, 3, 1, w2);
  CHECK(!w2.empty());
}

TEST_CASE("confusion matrix spec examples") {
  auto cm = confusion_matrix(LabelVector{{1, 1, 0, 0}}, LabelVector{{1, 0, 0, 0}});
  CHECK(cm.tp == 1);
  CHECK(cm.fn == 1);
  CHECK(cm.fp == 0);
  CHECK(cm.tn == 2);

  auto perfect = confusion_matrix(LabelVector{{1, 0}}, LabelVector{{1, 0}});
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  auto inverted = confusion_matrix(LabelVector{{1, 0}}, LabelVector{{0, 1}});
  CHECK(inverted.tp == 0);
  CHECK(inverted.tn == 0);

  CHECK_THROWS_AS(confusion_matrix(LabelVector{{1}}, LabelVector{{1, 0}}), DataError);
}

TEST_CASE("metrics: harmonic mean example, perfect case, zero-division flag") {
  // precision 0.8 (tp=8, fp=2), recall 2/3 (fn=4) -> F1 = 0.7273.
  ConfusionMatrix cm{8, 2, 4, 10};
  auto r = classification_metrics(cm);
  CHECK(r.at_risk.precision == doctest::Approx(0.8));
  CHECK(r.at_risk.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.at_risk.f1 == doctest::Approx(0.727272727).epsilon(1e-6));

  auto perfect = classification_metrics(ConfusionMatrix{5, 0, 0, 7});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.at_risk.f1 == 1.0);
  CHECK(perfect.not_at_risk.f1 == 1.0);
  CHECK(perfect.macro_avg.f1 == 1.0);
  CHECK(perfect.weighted_avg.f1 == 1.0);

  auto degenerate = classification_metrics(ConfusionMatrix{0, 0, 3, 5});
  CHECK(degenerate.at_risk.precision == 0.0);
  CHECK(degenerate.at_risk.zero_division);

  CHECK_THROWS_AS(classification_metrics(ConfusionMatrix{0, 0, 0, 0}), DataError);
}

TEST_CASE("accuracy equals weighted recall; macro f1 bounded by class f1s") {
  Rng rng(54);
  for (int it = 0; it < 200; ++it) {
    ConfusionMatrix cm;
    cm.tp = rng.below(30);
    cm.fp = rng.below(30);
    cm.fn = rng.below(30);
    cm.tn = rng.below(30);
    if (cm.total() == 0) cm.tn = 1;
    auto r = classification_metrics(cm);
    CHECK(r.accuracy == doctest::Approx(r.weighted_avg.recall).epsilon(1e-12));
    CHECK(r.macro_avg.f1 <= std::max(r.at_risk.f1, r.not_at_risk.f1) + 1e-12);
    CHECK(r.macro_avg.f1 >= std::min(r.at_risk.f1, r.not_at_risk.f1) - 1e-12);
  }
}

TEST_CASE("roc/auc spec examples") {
  LabelVector y{{1, 1, 0, 0}};
  auto [roc1, auc1] = roc_auc(y, {0.9, 0.8, 0.3, 0.2});
  CHECK(auc1 == doctest::Approx(1.0));
  CHECK(roc1.front().fpr == 0.0);
  CHECK(roc1.front().tpr == 0.0);
  CHECK(roc1.back().fpr == 1.0);
  CHECK(roc1.back().tpr == 1.0);

  LabelVector inv{{0, 0, 1, 1}};
  auto [roc2, auc2] = roc_auc(inv, {0.9, 0.8, 0.3, 0.2});
  CHECK(auc2 == doctest::Approx(0.0));

  auto [roc3, auc3] = roc_auc(y, {0.9, 0.4, 0.6, 0.2});
  CHECK(auc3 == doctest::Approx(0.75));

  LabelVector single{{1, 1}};
  CHECK_THROWS_AS(roc_auc(single, {0.5, 0.6}), DataError);
}

TEST_CASE("roc csv shape") {
  LabelVector y{{1, 0}};
  auto report = evaluate_predictions(y, {0.8, 0.2}, 0.5);
  CHECK(report.has_roc);
  auto csv = report.roc_csv();
  CHECK(csv.rfind("fpr,tpr,threshold", 0) == 0);
}

TEST_CASE("report text mirrors the table layout") {
  auto report = evaluate_predictions(LabelVector{{1, 1, 0, 0}},
                                     {0.9, 0.2, 0.4, 0.1}, 0.5);
  auto text = report.to_text();
  CHECK(text.find("not at-risk") != std::string::npos);
  CHECK(text.find("at-risk") != std::string::npos);
  CHECK(text.find("Accuracy") != std::string::npos);
  CHECK(text.find("Macro Avg") != std::string::npos);
  CHECK(text.find("Weighted Avg") != std::string::npos);
  CHECK(text.find("(4 instances)") != std::string::npos);
}

TEST_CASE("train_pipeline_model + cross_validate on separable data is perfect") {
  Rng rng(55);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    rows.push_back({rng.normal(-4, 0.3)});
    y.push_back(0);
    rows.push_back({rng.normal(4, 0.3)});
    y.push_back(1);
  }
  auto X = matrix_from(rows);
  LabelVector labels{y};
  WarningSink w;
  auto plan = stratified_kfold(labels, 5, 9, w);
  for (auto kind : {ModelKind::kLogReg, ModelKind::kGnb, ModelKind::kDTree}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.seed = 2;
    ResamplerConfig rc;  // none
    auto cv = cross_validate(spec, X, labels, plan, rc, 0.5, w);
    CHECK(cv.fold_reports.size() == 5);
    CHECK(cv.summary.at("accuracy").mean == doctest::Approx(1.0));
    CHECK(cv.summary.at("accuracy").stddev == doctest::Approx(0.0));
  }
}

TEST_CASE("cross_validate is deterministic and near baseline on noise") {
  // Pure-noise features: a majority-vote-like model should sit near 98/119.
  Rng rng(56);
  auto y = imbalance_21_98(57);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 119; ++i) rows.push_back({rng.normal(0, 1)});
  auto X = matrix_from(rows);
  WarningSink w;
  auto plan = stratified_kfold(y, 10, 10, w);
  ModelSpec spec;
  spec.kind = ModelKind::kLogReg;
  spec.seed = 3;
  ResamplerConfig rc;
  auto cv1 = cross_validate(spec, X, y, plan, rc, 0.5, w);
  auto cv2 = cross_validate(spec, X, y, plan, rc, 0.5, w);
  CHECK(cv1.summary.at("accuracy").mean == cv2.summary.at("accuracy").mean);
  CHECK(cv1.summary.at("accuracy").mean ==
        doctest::Approx(98.0 / 119.0).epsilon(0.08));
}

TEST_CASE("pipeline model standardizes for knn but scores raw for trees") {
  Rng rng(58);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({rng.normal(-3, 0.2) * 1000.0, rng.normal(0, 1)});
    y.push_back(0);
    rows.push_back({rng.normal(3, 0.2) * 1000.0, rng.normal(0, 1)});
    y.push_back(1);
  }
  auto X = matrix_from(rows);
  LabelVector labels{y};
  std::vector<std::size_t> all_rows(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) all_rows[i] = i;
  ResamplerConfig rc;
  WarningSink w;
  for (auto kind : {ModelKind::kKnn, ModelKind::kDTree}) {
    ModelSpec spec;
    spec.kind = kind;
    auto fitted = train_pipeline_model(spec, X, labels, all_rows, rc, w);
    auto pred = fitted.predict(X, 0.5, w);
    CHECK(pred.labels == y);
  }
}

TEST_CASE("smote inside cross_validate keeps test folds untouched") {
  Rng rng(59);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    const bool pos = i < 16;
    rows.push_back({rng.normal(pos ? 3 : -3, 0.5)});
    y.push_back(pos ? 1 : 0);
  }
  auto X = matrix_from(rows);
  LabelVector labels{y};
  WarningSink w;
  auto plan = stratified_kfold(labels, 4, 21, w);
  ModelSpec spec;
  spec.kind = ModelKind::kGnb;
  ResamplerConfig rc;
  rc.method = ResampleMethod::kSmote;
  rc.seed = 5;
  auto cv = cross_validate(spec, X, labels, plan, rc, 0.5, w);
  // Support in each fold report equals the real fold size (no synthetics).
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    CHECK(cv.fold_reports[f].cm.total() == plan.folds[f].size());
  }
}
