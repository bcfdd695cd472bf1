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
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "riskscreen/csv.hpp"
#include "riskscreen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace riskscreen;

namespace {

std::string key_from_env_or_file(const std::string& key_file) {
  if (const char* env = std::getenv("RISKSCREEN_KEY"); env != nullptr && *env != '\0') {
    return env;
  }
  if (!key_file.empty()) {
    std::ifstream f(key_file, std::ios::binary);
    if (!f) throw ConfigError("cannot open key file: " + key_file);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string key = ss.str();
    while (!key.empty() && (key.back() == '\n' || key.back() == '\r')) key.pop_back();
    return key;
  }
  throw ConfigError("pseudonymization key missing: set RISKSCREEN_KEY or pass --key-file");
}

void write_file(const std::string& path, const std::string& content) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
}

void print_warnings(const WarningSink& warnings) {
  for (const auto& w : warnings.messages()) std::cerr << "warning: " << w << "\n";
}

struct Prepared {
  Roster anon;
  LabelVector labels;
  FeatureEncoder encoder;
  FeatureMatrix X;  // imputed
  ImputationReport imputation;
};

Prepared prepare(const std::string& roster_path, const std::string& schema_path,
                 const std::string& key, WarningSink& warnings) {
  Prepared p;
  auto roster = load_roster(roster_path);
  auto schema = load_sidecar_schema(schema_path);
  auto consented = filter_consent(roster, warnings);
  if (consented.records.empty()) throw DataError("no consenting records in roster");
  p.anon = pseudonymize(consented, key);
  p.labels = derive_at_risk_labels(p.anon, RiskRule{});
  p.encoder.fit(p.anon, schema);
  p.X = p.encoder.transform(p.anon, warnings);
  p.imputation = impute_missing(p.X);
  return p;
}

std::map<std::string, int> load_outcomes(const std::string& path, bool hash_ids,
                                         const std::string& key) {
  auto table = csv::read_csv_file(path);
  auto idcol = table.column("student_id");
  auto labelcol = table.column("at_risk");
  if (!idcol || !labelcol) {
    throw DataError("outcomes file: required columns are student_id,at_risk");
  }
  std::map<std::string, int> out;
  for (const auto& row : table.rows) {
    std::string id = row[*idcol];
    if (hash_ids) id = pseudonymize_id(id, key);
    out[id] = row[*labelcol] == "1" ? 1 : 0;
  }
  return out;
}

PredictionList load_predictions(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open predictions file: " + path);
  std::stringstream filtered;
  std::string line;
  PredictionList list;
  while (std::getline(f, line)) {
    if (!line.empty() && line[0] == '#') continue;  // metadata line
    filtered << line << "\n";
  }
  auto table = csv::read_csv(filtered);
  auto idcol = table.column("student_id");
  auto scorecol = table.column("score");
  auto labelcol = table.column("predicted_at_risk");
  if (!idcol || !scorecol || !labelcol) {
    throw DataError("predictions file: required columns are student_id,score,predicted_at_risk");
  }
  for (const auto& row : table.rows) {
    PredictionList::Entry e;
    e.id = row[*idcol];
    e.score = std::stod(row[*scorecol]);
    e.label = row[*labelcol] == "1" ? 1 : 0;
    list.entries.push_back(std::move(e));
  }
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"at-risk student screening pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out", key_file;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "pipeline config file (key=value)");
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--key-file", key_file, "file holding the pseudonymization secret");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic roster");
  GeneratorConfig gen;
  synth->add_option("--students", gen.n_students, "roster size");
  synth->add_option("--at-risk", gen.n_at_risk, "at-risk count");
  synth->add_option("--missing-rate", gen.missing_rate, "per-cell missing probability");
  synth->add_option("--separation", gen.separation, "class-mean gap multiplier");
  synth->add_option("--extra-features", gen.n_extra_features, "noise feature count");
  synth->add_option("--no-consent", gen.no_consent_count, "rows with consent=false");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse, pseudonymize, and label a roster");
  std::string roster_path, schema_path;
  ingest->add_option("--roster", roster_path, "roster CSV")->required();
  ingest->add_option("--schema", schema_path, "schema sidecar CSV")->required();

  // features
  auto* features = app.add_subcommand("features", "rank features by correlation and forest importance");
  features->add_option("--roster", roster_path, "roster CSV")->required();
  features->add_option("--schema", schema_path, "schema sidecar CSV")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model and save it");
  std::string model_kind_str = "logreg", sampling_mode_str = "none", model_out;
  std::size_t select_k = 10;
  int phase = 0;
  train_cmd->add_option("--roster", roster_path)->required();
  train_cmd->add_option("--schema", schema_path)->required();
  train_cmd->add_option("--model", model_kind_str, "logreg|linear_svm|gnb|knn|dtree|rforest");
  train_cmd->add_option("--sampling", sampling_mode_str, "none|smote|adasyn");
  train_cmd->add_option("--k", select_k, "top-k source features");
  train_cmd->add_option("--phase", phase, "restrict to features available in this phase");
  train_cmd->add_option("--model-out", model_out, "model file path");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "stratified holdout evaluation");
  double test_fraction = 0.2, threshold = 0.5;
  evaluate->add_option("--roster", roster_path)->required();
  evaluate->add_option("--schema", schema_path)->required();
  evaluate->add_option("--model", model_kind_str);
  evaluate->add_option("--sampling", sampling_mode_str);
  evaluate->add_option("--k", select_k);
  evaluate->add_option("--test-fraction", test_fraction);
  evaluate->add_option("--threshold", threshold);

  // crossval
  auto* crossval = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  std::size_t cv_k = 10;
  crossval->add_option("--roster", roster_path)->required();
  crossval->add_option("--schema", schema_path)->required();
  crossval->add_option("--model", model_kind_str);
  crossval->add_option("--sampling", sampling_mode_str);
  crossval->add_option("--k", select_k);
  crossval->add_option("--folds", cv_k);
  crossval->add_option("--threshold", threshold);

  // predict
  auto* predict = app.add_subcommand("predict", "score a phase roster with a saved model");
  std::string model_file, phase_roster_path, phase_name = "phase1";
  predict->add_option("--model-file", model_file)->required();
  predict->add_option("--phase-roster", phase_roster_path)->required();
  predict->add_option("--phase", phase_name);
  predict->add_option("--threshold", threshold);
  bool ids_hashed = false;
  predict->add_flag("--ids-hashed", ids_hashed,
                    "roster ids are already pseudonymous; skip hashing");

  // report
  auto* report = app.add_subcommand(
      "report", "run the full pipeline (--config) or a misprediction report");
  std::string predictions_path, outcomes_path;
  bool hash_outcome_ids = false;
  report->add_option("--predictions", predictions_path, "prediction list CSV");
  report->add_option("--outcomes", outcomes_path, "final outcomes CSV (student_id,at_risk)");
  report->add_flag("--hash-outcome-ids", hash_outcome_ids,
                   "pseudonymize raw outcome ids with the key before joining");

  CLI11_PARSE(app, argc, argv);

  try {
    WarningSink warnings;

    if (synth->parsed()) {
      gen.seed = seed;
      auto generated = generate_roster(gen);
      write_generated_roster(generated, out_dir);
      std::cout << "wrote roster.csv, schema.csv, labels.csv to " << out_dir << "\n";
      return kExitOk;
    }

    if (ingest->parsed()) {
      const std::string key = key_from_env_or_file(key_file);
      auto p = prepare(roster_path, schema_path, key, warnings);
      std::ostringstream labels_csv;
      labels_csv << "student_id,at_risk\n";
      for (std::size_t i = 0; i < p.anon.records.size(); ++i) {
        labels_csv << p.anon.records[i].student_id << "," << p.labels.labels[i] << "\n";
      }
      write_file((fs::path(out_dir) / "derived_labels.csv").string(), labels_csv.str());
      write_file((fs::path(out_dir) / "imputation_report.csv").string(),
                 p.imputation.to_text());
      print_warnings(warnings);
      std::cout << p.anon.records.size() << " records, "
                << p.labels.positive_count() << " at risk\n";
      return kExitOk;
    }

    if (features->parsed()) {
      const std::string key = key_from_env_or_file(key_file);
      auto p = prepare(roster_path, schema_path, key, warnings);
      auto corr = rank_by_correlation(p.X, p.labels);
      auto imp = forest_importance(p.X, p.labels, ForestParams{},
                                   derive_seed(seed, 0xfea7));
      write_file((fs::path(out_dir) / "ranking_correlation.csv").string(), corr.to_csv());
      write_file((fs::path(out_dir) / "ranking_forest.csv").string(), imp.to_csv());
      print_warnings(warnings);
      std::cout << "wrote rankings for " << p.X.cols() << " encoded columns to "
                << out_dir << "\n";
      return kExitOk;
    }

    if (train_cmd->parsed() || evaluate->parsed() || crossval->parsed()) {
      const std::string key = key_from_env_or_file(key_file);
      auto kind = parse_model_kind(model_kind_str);
      if (!kind) throw ConfigError("unknown model kind '" + model_kind_str + "'");
      auto mode = parse_resample_method(sampling_mode_str);
      if (!mode) throw ConfigError("unknown sampling mode '" + sampling_mode_str + "'");

      auto roster_file = load_roster(roster_path);
      auto schema = load_sidecar_schema(schema_path);
      auto consented = filter_consent(roster_file, warnings);
      if (consented.records.empty()) throw DataError("no consenting records in roster");
      auto anon = pseudonymize(consented, key);
      auto labels = derive_at_risk_labels(anon, RiskRule{});
      FeatureEncoder encoder;
      encoder.fit(anon, schema);
      auto X_all = encoder.transform(anon, warnings);
      auto imputation = impute_missing(X_all);

      // Optional phase restriction before ranking.
      std::vector<std::size_t> allowed_cols;
      for (std::size_t c = 0; c < X_all.cols(); ++c) {
        if (phase > 0) {
          const auto* entry = schema.find(X_all.column(c).source_feature);
          if (entry != nullptr && !entry->phases.count(phase)) continue;
        }
        allowed_cols.push_back(c);
      }
      auto X_avail = X_all.select_columns(allowed_cols);

      auto ranking = rank_by_correlation(X_avail, labels);
      std::map<std::string, double> best_by_source;
      for (const auto& e : ranking.entries) {
        auto idx = X_avail.column_index(e.feature);
        const auto& src = X_avail.column(*idx).source_feature;
        const double s = e.degenerate ? -1.0 : std::fabs(e.score);
        auto it = best_by_source.find(src);
        if (it == best_by_source.end() || s > it->second) best_by_source[src] = s;
      }
      std::vector<std::pair<double, std::string>> ordered;
      for (const auto& [src, s] : best_by_source) ordered.emplace_back(-s, src);
      std::sort(ordered.begin(), ordered.end());
      const std::size_t k = std::min(select_k, ordered.size());
      std::vector<std::string> chosen_sources;
      for (std::size_t i = 0; i < k; ++i) chosen_sources.push_back(ordered[i].second);

      std::vector<std::size_t> sel_cols;
      std::vector<std::string> sel_names;
      std::vector<double> fills;
      for (std::size_t j = 0; j < X_avail.cols(); ++j) {
        const auto& meta = X_avail.column(j);
        if (std::find(chosen_sources.begin(), chosen_sources.end(),
                      meta.source_feature) == chosen_sources.end()) {
          continue;
        }
        sel_cols.push_back(j);
        sel_names.push_back(meta.name);
        for (const auto& e : imputation.entries) {
          if (e.column == meta.name) fills.push_back(e.fill_value);
        }
      }
      auto X_sel = X_avail.select_columns(sel_cols);

      ResamplerConfig rc;
      rc.method = *mode;
      rc.seed = derive_seed(seed, 0x5a00u + static_cast<std::uint64_t>(*mode));
      ModelSpec spec;
      spec.kind = *kind;
      spec.seed = derive_seed(seed, 0x4d00u + static_cast<std::uint64_t>(*kind));

      if (train_cmd->parsed()) {
        std::vector<std::size_t> all_rows(X_sel.rows());
        for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
        auto fitted = train_pipeline_model(spec, X_sel, labels, all_rows, rc, warnings);
        DeployableModel deployable;
        deployable.encoder = encoder.restricted(chosen_sources);
        deployable.selected_columns = sel_names;
        deployable.imputation_fill = fills;
        deployable.pipeline.model = std::move(fitted.model);
        deployable.pipeline.std_params = fitted.std_params;
        deployable.model_id = sampling_mode_str + "_" + model_kind_str +
                              (phase > 0 ? "_phase" + std::to_string(phase) : "");
        const std::string path =
            model_out.empty()
                ? (fs::path(out_dir) / ("model_" + deployable.model_id + ".json")).string()
                : model_out;
        if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
          fs::create_directories(parent);
        }
        deployable.save(path);
        print_warnings(warnings);
        std::cout << "saved " << path << "\n";
      } else if (evaluate->parsed()) {
        std::vector<std::size_t> train_rows, test_rows;
        stratified_holdout_split(labels, test_fraction, derive_seed(seed, 0x5011),
                                 train_rows, test_rows);
        auto fitted = train_pipeline_model(spec, X_sel, labels, train_rows, rc, warnings);
        auto X_test = X_sel.select_rows(test_rows);
        LabelVector y_test;
        for (auto i : test_rows) y_test.labels.push_back(labels.labels[i]);
        auto report_out =
            evaluate_predictions(y_test, fitted.score(X_test, warnings), threshold);
        print_warnings(warnings);
        std::cout << report_out.to_text();
      } else {
        auto plan = stratified_kfold(labels, cv_k, derive_seed(seed, 0xc0de), warnings);
        auto cv = cross_validate(spec, X_sel, labels, plan, rc, threshold, warnings);
        print_warnings(warnings);
        std::cout << cv.to_text();
      }
      return kExitOk;
    }

    if (predict->parsed()) {
      auto model = DeployableModel::load(model_file);
      auto phase_roster = load_phase_roster(phase_roster_path);
      if (!ids_hashed) {
        const std::string key = key_from_env_or_file(key_file);
        for (auto& r : phase_roster.records) {
          r.student_id = pseudonymize_id(r.student_id, key);
        }
      }
      auto list = phase_predictions(model, phase_roster, phase_name, threshold, warnings);
      write_file((fs::path(out_dir) / ("predictions_" + phase_name + "_full.csv")).string(),
                 list.full_csv());
      write_file(
          (fs::path(out_dir) / ("predictions_" + phase_name + "_at_risk.csv")).string(),
          list.at_risk_csv());
      print_warnings(warnings);
      std::cout << list.entries.size() << " predictions, "
                << list.at_risk_only().size() << " flagged at risk\n";
      return kExitOk;
    }

    if (report->parsed()) {
      if (!predictions_path.empty() || !outcomes_path.empty()) {
        if (predictions_path.empty() || outcomes_path.empty()) {
          throw ConfigError("misprediction report needs both --predictions and --outcomes");
        }
        std::string key;
        if (hash_outcome_ids) key = key_from_env_or_file(key_file);
        auto predictions = load_predictions(predictions_path);
        auto outcomes = load_outcomes(outcomes_path, hash_outcome_ids, key);
        auto mp = misprediction_rate(predictions, outcomes);
        std::cout << mp.to_text();
        return kExitOk;
      }
      if (config_path.empty()) {
        throw ConfigError("report: pass --config for a pipeline run, or "
                          "--predictions/--outcomes for a misprediction report");
      }
      auto config = load_pipeline_config(config_path);
      if (app.count("--seed")) config.seed = seed;
      if (app.count("--out")) config.out_dir = out_dir;
      if (config.key.empty() && !key_file.empty()) {
        config.key = key_from_env_or_file(key_file);
      }
      auto bundle = run_pipeline(config);
      std::cout << "wrote " << bundle.manifest.size() << " artifacts to "
                << bundle.out_dir << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const PrivacyError& e) {
    std::cerr << "privacy violation: " << e.what() << "\n";
    return kExitPrivacyError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
