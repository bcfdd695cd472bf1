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

#include <map>
#include <string>
#include <vector>

#include "riskscreen/eval.hpp"
#include "riskscreen/featsel.hpp"
#include "riskscreen/syndata.hpp"

namespace riskscreen {

struct PhaseWindow {
  std::string name;
  int start_week = 1;  // half-open (start-1, end]; the first phase starts at week 1
  int end_week = 8;
};

std::vector<PhaseWindow> default_phase_windows();
// Windows must be contiguous, non-overlapping, and cover weeks 1..16.
void validate_phase_windows(const std::vector<PhaseWindow>& windows);

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string roster_path;
  std::string schema_path;
  std::string out_dir;
  std::string key;  // pseudonymization secret, from env or key file only

  RiskRule risk_rule;
  RankingMethod selection_method = RankingMethod::kCorrelation;
  std::size_t select_k = 10;
  ResamplerConfig resampler;  // k_neighbors/target_ratio/beta/seed template
  std::vector<ResampleMethod> sampling_modes = {
      ResampleMethod::kNone, ResampleMethod::kSmote, ResampleMethod::kAdasyn};
  std::vector<ModelKind> models = {ModelKind::kLogReg, ModelKind::kLinearSvm,
                                   ModelKind::kGnb,    ModelKind::kKnn,
                                   ModelKind::kDTree,  ModelKind::kRForest};
  double test_fraction = 0.2;
  std::size_t cv_k = 10;
  std::size_t cv_repeats = 1;
  double threshold = 0.5;
  bool resample_before_split = false;  // paper-style 196-instance evaluation
  std::vector<PhaseWindow> phases = default_phase_windows();

  ModelSpec spec_for(ModelKind kind) const;
  void validate() const;
};

// Flat key=value config file; '#' starts a comment. Unknown keys are an
// error. The secret key is taken from RISKSCREEN_KEY or a key_file entry,
// never from the file's own values.
PipelineConfig load_pipeline_config(const std::string& path);

struct ArtifactBundle {
  std::string out_dir;
  // File name -> sha256 hex, as written to manifest.txt.
  std::map<std::string, std::string> manifest;
};

// Full run: ingest -> preprocess -> featsel -> split -> resample(train) ->
// train every (sampling mode, model) pair -> evaluate + cross-validate ->
// write reports, rankings, ROC files, models, and a hashed manifest.
// Deterministic per seed; on error the partially written bundle is removed.
ArtifactBundle run_pipeline(const PipelineConfig& config);

// rows = models; columns = accuracy/precision/recall/f1/auc; the best
// accuracy row is flagged.
std::string comparison_table_csv(
    const std::vector<std::pair<std::string, EvaluationReport>>& reports);

// Everything needed to score a new roster: encoder vocabulary, imputation
// fill values, selected columns, standardization, and the classifier.
struct DeployableModel {
  FeatureEncoder encoder;
  std::vector<std::string> selected_columns;  // encoded names, model input order
  std::vector<double> imputation_fill;        // aligned to selected_columns
  PipelineModel pipeline;
  std::string model_id;

  void save(const std::string& path) const;
  static DeployableModel load(const std::string& path);

  // Encodes, fills, selects, and scores roster rows.
  std::vector<double> score_roster(const Roster& roster, WarningSink& warnings) const;
};

struct PredictionList {
  struct Entry {
    std::string id;  // pseudonymous
    double score = 0.0;
    int label = 0;
  };
  std::vector<Entry> entries;
  std::string phase;
  std::string model_id;
  std::string run_tag;  // deterministic generated-at marker

  std::vector<Entry> at_risk_only() const;
  std::string full_csv() const;
  std::string at_risk_csv() const;
};

// Phase roster: `student_id` plus feature columns only. A name or email
// column is a privacy violation, not a parse error.
Roster parse_phase_roster(std::istream& in);
Roster load_phase_roster(const std::string& path);

// Scores one phase roster. Hard error if the roster carries raw name/email
// columns (anonymization gate) or its features do not match the model.
PredictionList phase_predictions(const DeployableModel& model, const Roster& phase_roster,
                                 const std::string& phase_name, double threshold,
                                 WarningSink& warnings);

struct MispredictionReport {
  std::size_t joined = 0;
  std::size_t mismatches = 0;
  double rate = 0.0;  // mismatches / joined
  std::vector<std::string> false_positives;  // predicted at-risk, outcome fine
  std::vector<std::string> false_negatives;
  std::vector<std::string> unjoined_prediction_ids;
  std::vector<std::string> unjoined_outcome_ids;

  std::string to_text() const;
};

MispredictionReport misprediction_rate(const PredictionList& predictions,
                                       const std::map<std::string, int>& final_outcomes);

std::string sha256_hex(const std::string& bytes);

// Scans every regular file under `dir` for the given raw identifiers;
// throws PrivacyError naming the file and identifier on a hit.
void privacy_scan_dir(const std::string& dir,
                      const std::vector<std::string>& raw_identifiers);

}  // namespace riskscreen
