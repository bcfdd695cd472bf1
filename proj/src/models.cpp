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
#include "riskscreen/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "riskscreen/rng.hpp"

namespace riskscreen {

using nlohmann::json;

const std::string& model_kind_token(ModelKind kind) {
  static const std::string tokens[] = {"logreg", "linear_svm", "gnb",
                                       "knn",    "dtree",      "rforest"};
  return tokens[static_cast<int>(kind)];
}

std::optional<ModelKind> parse_model_kind(const std::string& token) {
  for (int i = 0; i < 6; ++i) {
    auto kind = static_cast<ModelKind>(i);
    if (model_kind_token(kind) == token) return kind;
  }
  return std::nullopt;
}

bool kind_wants_standardized_input(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLogReg:
    case ModelKind::kLinearSvm:
    case ModelKind::kKnn:
      return true;
    default:
      return false;
  }
}

void ModelSpec::validate() const {
  switch (kind) {
    case ModelKind::kLogReg:
      if (logreg.learning_rate <= 0 || logreg.epochs == 0 || logreg.l2 < 0) {
        throw ConfigError("logreg: learning_rate > 0, epochs > 0, l2 >= 0 required");
      }
      break;
    case ModelKind::kLinearSvm:
      if (svm.learning_rate <= 0 || svm.epochs == 0 || svm.l2 < 0) {
        throw ConfigError("linear_svm: learning_rate > 0, epochs > 0, l2 >= 0 required");
      }
      break;
    case ModelKind::kGnb:
      if (gnb.var_smoothing < 0) throw ConfigError("gnb: var_smoothing >= 0 required");
      break;
    case ModelKind::kKnn:
      if (knn.k == 0) throw ConfigError("knn: k >= 1 required");
      break;
    case ModelKind::kDTree:
      if (tree.min_samples_split < 2) {
        throw ConfigError("dtree: min_samples_split >= 2 required");
      }
      break;
    case ModelKind::kRForest:
      if (forest.n_trees == 0) throw ConfigError("rforest: n_trees >= 1 required");
      if (forest.tree.min_samples_split < 2) {
        throw ConfigError("rforest: min_samples_split >= 2 required");
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// Training primitives

LossGradient logreg_loss_gradient(const std::vector<double>& w, double b,
                                  const FeatureMatrix& X, const LabelVector& y,
                                  double l2) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (w.size() != d || y.size() != n) {
    throw DataError("logreg_loss_gradient: shape mismatch");
  }
  LossGradient out;
  out.grad_w.assign(d, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t c = 0; c < d; ++c) z += w[c] * X.at(i, c);
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double yi = y.labels[i];
    // numerically stable cross-entropy: log(1+e^z) - y*z
    loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - yi * z;
    const double diff = p - yi;
    for (std::size_t c = 0; c < d; ++c) out.grad_w[c] += diff * X.at(i, c);
    out.grad_b += diff;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  out.grad_b *= inv_n;
  double reg = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    out.grad_w[c] = out.grad_w[c] * inv_n + l2 * w[c];
    reg += w[c] * w[c];
  }
  out.loss = loss + 0.5 * l2 * reg;
  return out;
}

LossGradient hinge_subgradient(const std::vector<double>& w, double b,
                               const FeatureMatrix& X,
                               const std::vector<int>& y_pm, double l2) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (w.size() != d || y_pm.size() != n) {
    throw DataError("hinge_subgradient: shape mismatch");
  }
  LossGradient out;
  out.grad_w.assign(d, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t c = 0; c < d; ++c) z += w[c] * X.at(i, c);
    const double margin = y_pm[i] * z;
    if (margin < 1.0) {
      loss += 1.0 - margin;
      for (std::size_t c = 0; c < d; ++c) out.grad_w[c] -= y_pm[i] * X.at(i, c);
      out.grad_b -= y_pm[i];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  out.grad_b *= inv_n;
  double reg = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    out.grad_w[c] = out.grad_w[c] * inv_n + l2 * w[c];
    reg += w[c] * w[c];
  }
  out.loss = loss + 0.5 * l2 * reg;
  return out;
}

double gini_impurity(const std::vector<std::size_t>& class_counts) {
  std::size_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) throw DataError("gini_impurity: all-zero counts");
  double sum_sq = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::optional<AxisSplit> best_axis_split(const FeatureMatrix& X,
                                         const std::vector<int>& y,
                                         const std::vector<std::size_t>& rows,
                                         const std::vector<std::size_t>& feature_candidates) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;

  std::size_t total_pos = 0;
  for (auto r : rows) total_pos += static_cast<std::size_t>(y[r]);
  const std::size_t total_neg = n - total_pos;
  if (total_pos == 0 || total_neg == 0) return std::nullopt;  // pure node
  const double parent_impurity = gini_impurity({total_neg, total_pos});

  std::optional<AxisSplit> best;
  std::vector<std::pair<double, int>> sorted;  // (value, label)
  for (std::size_t f : feature_candidates) {
    sorted.clear();
    for (auto r : rows) sorted.emplace_back(X.at(r, f), y[r]);
    std::sort(sorted.begin(), sorted.end());

    std::size_t left_n = 0, left_pos = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_pos += static_cast<std::size_t>(sorted[i].second);
      if (sorted[i].first == sorted[i + 1].first) continue;  // not a boundary
      const double threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
      const std::size_t right_n = n - left_n;
      const std::size_t right_pos = total_pos - left_pos;
      const double imp_l = gini_impurity({left_n - left_pos, left_pos});
      const double imp_r = gini_impurity({right_n - right_pos, right_pos});
      const double decrease = parent_impurity -
          (static_cast<double>(left_n) / n) * imp_l -
          (static_cast<double>(right_n) / n) * imp_r;
      if (decrease <= 0) continue;
      const bool better =
          !best || decrease > best->impurity_decrease ||
          (decrease == best->impurity_decrease &&
           (f < best->feature || (f == best->feature && threshold < best->threshold)));
      if (better) best = AxisSplit{f, threshold, decrease};
    }
  }
  return best;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DataError("bootstrap_indices: n must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = rng.below(n);
  return out;
}

// ---------------------------------------------------------------------------
// Shared tree machinery

namespace {

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_fraction = 0.0;  // class-1 fraction at this node
};

struct BuiltTree {
  std::vector<TreeNode> nodes;
  std::vector<double> importance;  // raw impurity-decrease mass per feature
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, const std::vector<int>& y,
              const TreeParams& params, std::size_t max_features, Rng* rng)
      : X_(X), y_(y), params_(params), max_features_(max_features), rng_(rng) {
    tree_.importance.assign(X.cols(), 0.0);
  }

  BuiltTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::size_t pos = 0;
    for (auto r : rows) pos += static_cast<std::size_t>(y_[r]);
    tree_.nodes[node_id].leaf_fraction =
        static_cast<double>(pos) / static_cast<double>(rows.size());

    const bool depth_ok = params_.max_depth < 0 || depth < params_.max_depth;
    if (!depth_ok || rows.size() < params_.min_samples_split || pos == 0 ||
        pos == rows.size()) {
      return node_id;
    }

    auto split = best_axis_split(X_, y_, rows, candidate_features());
    if (!split) return node_id;

    tree_.importance[split->feature] +=
        static_cast<double>(rows.size()) * split->impurity_decrease;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) {
      (X_.at(r, split->feature) <= split->threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[node_id].feature = static_cast<int>(split->feature);
    tree_.nodes[node_id].threshold = split->threshold;
    const int left = grow(std::move(left_rows), depth + 1);
    tree_.nodes[node_id].left = left;
    const int right = grow(std::move(right_rows), depth + 1);
    tree_.nodes[node_id].right = right;
    return node_id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = X_.cols();
    if (rng_ == nullptr || max_features_ == 0 || max_features_ >= d) {
      std::vector<std::size_t> all(d);
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    // Partial Fisher-Yates draw, then sorted so the lowest-index tie-break
    // is independent of draw order.
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < max_features_; ++i) {
      std::swap(pool[i], pool[i + rng_->below(d - i)]);
    }
    std::vector<std::size_t> subset(pool.begin(), pool.begin() + max_features_);
    std::sort(subset.begin(), subset.end());
    return subset;
  }

  const FeatureMatrix& X_;
  const std::vector<int>& y_;
  TreeParams params_;
  std::size_t max_features_;
  Rng* rng_;
  BuiltTree tree_;
};

double tree_leaf_fraction(const std::vector<TreeNode>& nodes, const FeatureMatrix& X,
                          std::size_t row) {
  int node = 0;
  while (nodes[node].feature >= 0) {
    node = X.at(row, static_cast<std::size_t>(nodes[node].feature)) <=
                   nodes[node].threshold
               ? nodes[node].left
               : nodes[node].right;
  }
  return nodes[node].leaf_fraction;
}

json tree_to_json(const std::vector<TreeNode>& nodes) {
  json arr = json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"f", n.feature},
                   {"t", n.threshold},
                   {"l", n.left},
                   {"r", n.right},
                   {"p", n.leaf_fraction}});
  }
  return arr;
}

std::vector<TreeNode> tree_from_json(const json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& j : arr) {
    TreeNode n;
    n.feature = j.at("f").get<int>();
    n.threshold = j.at("t").get<double>();
    n.left = j.at("l").get<int>();
    n.right = j.at("r").get<int>();
    n.leaf_fraction = j.at("p").get<double>();
    nodes.push_back(n);
  }
  return nodes;
}

std::vector<std::string> column_names(const FeatureMatrix& X) {
  std::vector<std::string> names;
  names.reserve(X.cols());
  for (const auto& c : X.columns()) names.push_back(c.name);
  return names;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Concrete models

class LinearModel : public TrainedModel {
 public:
  LinearModel(ModelKind kind, std::vector<std::string> names, std::vector<double> w,
              double b)
      : TrainedModel(kind, std::move(names), true), w_(std::move(w)), b_(b) {}

  std::vector<double> score_rows(const FeatureMatrix& X) const override {
    std::vector<double> scores(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double z = b_;
      for (std::size_t c = 0; c < X.cols(); ++c) z += w_[c] * X.at(i, c);
      scores[i] = sigmoid(z);
    }
    return scores;
  }

  void serialize_params(json& j) const override {
    j["weights"] = w_;
    j["bias"] = b_;
  }

 private:
  std::vector<double> w_;
  double b_;
};

class GnbModel : public TrainedModel {
 public:
  GnbModel(std::vector<std::string> names, double prior_pos,
           std::vector<double> mean_neg, std::vector<double> mean_pos,
           std::vector<double> var_neg, std::vector<double> var_pos)
      : TrainedModel(ModelKind::kGnb, std::move(names), false),
        prior_pos_(prior_pos),
        mean_{std::move(mean_neg), std::move(mean_pos)},
        var_{std::move(var_neg), std::move(var_pos)} {}

  std::vector<double> score_rows(const FeatureMatrix& X) const override {
    std::vector<double> scores(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double log_like[2] = {std::log(1.0 - prior_pos_), std::log(prior_pos_)};
      for (int cls = 0; cls < 2; ++cls) {
        for (std::size_t c = 0; c < X.cols(); ++c) {
          const double d = X.at(i, c) - mean_[cls][c];
          log_like[cls] -= 0.5 * std::log(2.0 * M_PI * var_[cls][c]) +
                           d * d / (2.0 * var_[cls][c]);
        }
      }
      scores[i] = 1.0 / (1.0 + std::exp(log_like[0] - log_like[1]));
    }
    return scores;
  }

  void serialize_params(json& j) const override {
    j["prior_pos"] = prior_pos_;
    j["mean_neg"] = mean_[0];
    j["mean_pos"] = mean_[1];
    j["var_neg"] = var_[0];
    j["var_pos"] = var_[1];
  }

 private:
  double prior_pos_;
  std::vector<double> mean_[2];
  std::vector<double> var_[2];
};

class KnnModel : public TrainedModel {
 public:
  KnnModel(std::vector<std::string> names, std::size_t k,
           std::vector<std::vector<double>> train_rows, std::vector<int> train_labels)
      : TrainedModel(ModelKind::kKnn, std::move(names), true),
        k_(k),
        train_rows_(std::move(train_rows)),
        train_labels_(std::move(train_labels)) {}

  std::vector<double> score_rows(const FeatureMatrix& X) const override {
    const std::size_t n = train_rows_.size();
    const std::size_t k = std::min(k_, n);
    std::vector<double> scores(X.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < X.cols(); ++c) {
          const double d = X.at(i, c) - train_rows_[t][c];
          d2 += d * d;
        }
        dist[t] = {d2, t};  // index in the pair breaks distance ties
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      std::size_t pos = 0;
      for (std::size_t j = 0; j < k; ++j) {
        pos += static_cast<std::size_t>(train_labels_[dist[j].second]);
      }
      scores[i] = static_cast<double>(pos) / static_cast<double>(k);
    }
    return scores;
  }

  void serialize_params(json& j) const override {
    j["k"] = k_;
    j["train_rows"] = train_rows_;
    j["train_labels"] = train_labels_;
  }

 private:
  std::size_t k_;
  std::vector<std::vector<double>> train_rows_;
  std::vector<int> train_labels_;
};

class DTreeModel : public TrainedModel {
 public:
  DTreeModel(std::vector<std::string> names, std::vector<TreeNode> nodes)
      : TrainedModel(ModelKind::kDTree, std::move(names), false),
        nodes_(std::move(nodes)) {}

  std::vector<double> score_rows(const FeatureMatrix& X) const override {
    std::vector<double> scores(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      scores[i] = tree_leaf_fraction(nodes_, X, i);
    }
    return scores;
  }

  void serialize_params(json& j) const override { j["nodes"] = tree_to_json(nodes_); }

 private:
  std::vector<TreeNode> nodes_;
};

class RForestModel : public TrainedModel {
 public:
  RForestModel(std::vector<std::string> names, std::vector<std::vector<TreeNode>> trees,
               std::vector<double> importances)
      : TrainedModel(ModelKind::kRForest, std::move(names), false),
        trees_(std::move(trees)),
        importances_(std::move(importances)) {}

  // Score = fraction of trees voting at-risk, so values lie on {0, 1/T, ..., 1}.
  std::vector<double> score_rows(const FeatureMatrix& X) const override {
    std::vector<double> scores(X.rows(), 0.0);
    for (const auto& tree : trees_) {
      for (std::size_t i = 0; i < X.rows(); ++i) {
        if (tree_leaf_fraction(tree, X, i) >= 0.5) scores[i] += 1.0;
      }
    }
    for (auto& s : scores) s /= static_cast<double>(trees_.size());
    return scores;
  }

  const std::vector<double>& importances() const { return importances_; }

  void serialize_params(json& j) const override {
    json trees = json::array();
    for (const auto& t : trees_) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
    j["importances"] = importances_;
  }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  std::vector<double> importances_;
};

void require_both_classes(const LabelVector& y, const char* kind) {
  const auto pos = y.positive_count();
  if (pos == 0 || pos == y.size()) {
    throw DataError(std::string(kind) + ": training set contains a single class");
  }
}

std::vector<std::vector<double>> matrix_rows(const FeatureMatrix& X) {
  std::vector<std::vector<double>> rows;
  rows.reserve(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) rows.push_back(X.row_values(i));
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> TrainedModel::predict_scores(const FeatureMatrix& X) const {
  if (X.cols() != feature_names_.size()) {
    throw DataError("predict: expected " + std::to_string(feature_names_.size()) +
                    " columns, got " + std::to_string(X.cols()));
  }
  for (std::size_t c = 0; c < X.cols(); ++c) {
    if (X.column(c).name != feature_names_[c]) {
      throw DataError("predict: column '" + X.column(c).name +
                      "' does not match trained column '" + feature_names_[c] + "'");
    }
  }
  if (X.has_missing()) throw DataError("predict: matrix has missing values");
  return score_rows(X);
}

LabelVector TrainedModel::predict_labels(const FeatureMatrix& X, double threshold) const {
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("predict: threshold must lie in [0,1]");
  }
  const auto scores = predict_scores(X);
  LabelVector y;
  y.labels.reserve(scores.size());
  for (double s : scores) y.labels.push_back(s >= threshold ? 1 : 0);
  return y;
}

std::unique_ptr<TrainedModel> train(const ModelSpec& spec, const FeatureMatrix& X,
                                    const LabelVector& y, WarningSink& warnings) {
  spec.validate();
  if (X.rows() == 0 || X.cols() == 0) throw DataError("train: empty feature matrix");
  if (y.size() != X.rows()) throw DataError("train: labels/rows mismatch");
  if (X.has_missing()) throw DataError("train: matrix has missing values");

  auto names = column_names(X);
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();

  switch (spec.kind) {
    case ModelKind::kLogReg: {
      require_both_classes(y, "logreg");
      std::vector<double> w(d, 0.0);
      double b = 0.0;
      for (std::size_t e = 0; e < spec.logreg.epochs; ++e) {
        auto g = logreg_loss_gradient(w, b, X, y, spec.logreg.l2);
        for (std::size_t c = 0; c < d; ++c) w[c] -= spec.logreg.learning_rate * g.grad_w[c];
        b -= spec.logreg.learning_rate * g.grad_b;
      }
      return std::make_unique<LinearModel>(ModelKind::kLogReg, std::move(names),
                                           std::move(w), b);
    }
    case ModelKind::kLinearSvm: {
      require_both_classes(y, "linear_svm");
      std::vector<int> y_pm(n);
      for (std::size_t i = 0; i < n; ++i) y_pm[i] = y.labels[i] == 1 ? 1 : -1;
      std::vector<double> w(d, 0.0);
      double b = 0.0;
      for (std::size_t e = 0; e < spec.svm.epochs; ++e) {
        auto g = hinge_subgradient(w, b, X, y_pm, spec.svm.l2);
        for (std::size_t c = 0; c < d; ++c) w[c] -= spec.svm.learning_rate * g.grad_w[c];
        b -= spec.svm.learning_rate * g.grad_b;
      }
      return std::make_unique<LinearModel>(ModelKind::kLinearSvm, std::move(names),
                                           std::move(w), b);
    }
    case ModelKind::kGnb: {
      require_both_classes(y, "gnb");
      std::vector<double> mean[2], var[2];
      std::size_t count[2] = {0, 0};
      for (int cls = 0; cls < 2; ++cls) {
        mean[cls].assign(d, 0.0);
        var[cls].assign(d, 0.0);
      }
      for (std::size_t i = 0; i < n; ++i) ++count[y.labels[i]];
      for (std::size_t c = 0; c < d; ++c) {
        double sum[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) sum[y.labels[i]] += X.at(i, c);
        for (int cls = 0; cls < 2; ++cls) mean[cls][c] = sum[cls] / count[cls];
        double ss[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
          const double dv = X.at(i, c) - mean[y.labels[i]][c];
          ss[y.labels[i]] += dv * dv;
        }
        for (int cls = 0; cls < 2; ++cls) var[cls][c] = ss[cls] / count[cls];
      }
      // Smoothing scaled to the largest overall feature variance.
      double max_var = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += X.at(i, c);
        const double mu = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dv = X.at(i, c) - mu;
          ss += dv * dv;
        }
        max_var = std::max(max_var, ss / n);
      }
      double eps = spec.gnb.var_smoothing * max_var;
      if (eps <= 0.0) eps = 1e-12;
      for (int cls = 0; cls < 2; ++cls) {
        for (auto& v : var[cls]) v += eps;
      }
      const double prior_pos = static_cast<double>(count[1]) / n;
      return std::make_unique<GnbModel>(std::move(names), prior_pos, std::move(mean[0]),
                                        std::move(mean[1]), std::move(var[0]),
                                        std::move(var[1]));
    }
    case ModelKind::kKnn: {
      const auto pos = y.positive_count();
      if (pos == 0 || pos == y.size()) {
        warnings.warn("knn: training set contains a single class");
      }
      if (spec.knn.k > n) {
        warnings.warn("knn: k=" + std::to_string(spec.knn.k) + " exceeds " +
                      std::to_string(n) + " training rows; clamped");
      }
      return std::make_unique<KnnModel>(std::move(names), spec.knn.k, matrix_rows(X),
                                        y.labels);
    }
    case ModelKind::kDTree: {
      require_both_classes(y, "dtree");
      std::vector<std::size_t> rows(n);
      std::iota(rows.begin(), rows.end(), 0);
      TreeBuilder builder(X, y.labels, spec.tree, 0, nullptr);
      auto tree = builder.build(std::move(rows));
      return std::make_unique<DTreeModel>(std::move(names), std::move(tree.nodes));
    }
    case ModelKind::kRForest: {
      require_both_classes(y, "rforest");
      std::size_t max_features = spec.forest.max_features;
      if (max_features == 0) {
        max_features = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
      }
      std::vector<std::vector<TreeNode>> trees;
      std::vector<double> importance(d, 0.0);
      trees.reserve(spec.forest.n_trees);
      for (std::size_t t = 0; t < spec.forest.n_trees; ++t) {
        const std::uint64_t tree_seed = derive_seed(spec.seed, t);
        Rng rng(tree_seed);
        std::vector<std::size_t> rows;
        if (spec.forest.bootstrap) {
          rows = bootstrap_indices(n, derive_seed(tree_seed, 0x0b00));
        } else {
          rows.resize(n);
          std::iota(rows.begin(), rows.end(), 0);
        }
        TreeBuilder builder(X, y.labels, spec.forest.tree, max_features,
                            max_features < d ? &rng : nullptr);
        auto tree = builder.build(std::move(rows));
        for (std::size_t c = 0; c < d; ++c) importance[c] += tree.importance[c];
        trees.push_back(std::move(tree.nodes));
      }
      double total = std::accumulate(importance.begin(), importance.end(), 0.0);
      if (total > 0) {
        for (auto& v : importance) v /= total;
      }
      return std::make_unique<RForestModel>(std::move(names), std::move(trees),
                                            std::move(importance));
    }
  }
  throw ConfigError("train: unknown model kind");
}

std::vector<double> forest_feature_importances(const TrainedModel& model) {
  const auto* forest = dynamic_cast<const RForestModel*>(&model);
  if (forest == nullptr) {
    throw DataError("forest_feature_importances: model is not a random forest");
  }
  return forest->importances();
}

json TrainedModel::to_json() const {
  json j;
  j["format"] = "riskscreen-model";
  j["version"] = 1;
  j["kind"] = model_kind_token(kind_);
  j["feature_names"] = feature_names_;
  j["standardized_input"] = standardized_input_;
  json params = json::object();
  serialize_params(params);
  j["params"] = std::move(params);
  return j;
}

std::unique_ptr<TrainedModel> TrainedModel::from_json(const json& j) {
  if (j.value("format", "") != "riskscreen-model" || j.value("version", 0) != 1) {
    throw DataError("model file: unknown format or version");
  }
  auto kind = parse_model_kind(j.at("kind").get<std::string>());
  if (!kind) throw DataError("model file: unknown kind '" + j.at("kind").get<std::string>() + "'");
  auto names = j.at("feature_names").get<std::vector<std::string>>();
  const auto& p = j.at("params");
  switch (*kind) {
    case ModelKind::kLogReg:
    case ModelKind::kLinearSvm:
      return std::make_unique<LinearModel>(*kind, std::move(names),
                                           p.at("weights").get<std::vector<double>>(),
                                           p.at("bias").get<double>());
    case ModelKind::kGnb:
      return std::make_unique<GnbModel>(std::move(names), p.at("prior_pos").get<double>(),
                                        p.at("mean_neg").get<std::vector<double>>(),
                                        p.at("mean_pos").get<std::vector<double>>(),
                                        p.at("var_neg").get<std::vector<double>>(),
                                        p.at("var_pos").get<std::vector<double>>());
    case ModelKind::kKnn:
      return std::make_unique<KnnModel>(
          std::move(names), p.at("k").get<std::size_t>(),
          p.at("train_rows").get<std::vector<std::vector<double>>>(),
          p.at("train_labels").get<std::vector<int>>());
    case ModelKind::kDTree:
      return std::make_unique<DTreeModel>(std::move(names),
                                          tree_from_json(p.at("nodes")));
    case ModelKind::kRForest: {
      std::vector<std::vector<TreeNode>> trees;
      for (const auto& t : p.at("trees")) trees.push_back(tree_from_json(t));
      return std::make_unique<RForestModel>(std::move(names), std::move(trees),
                                            p.at("importances").get<std::vector<double>>());
    }
  }
  throw DataError("model file: unhandled kind");
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file: " + path);
  f << model.to_json().dump(2) << "\n";
}

std::unique_ptr<TrainedModel> load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file: " + path);
  json j;
  f >> j;
  return TrainedModel::from_json(j);
}

}  // namespace riskscreen
