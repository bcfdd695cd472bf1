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
#include "riskscreen/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskscreen/csv.hpp"

namespace riskscreen {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<PhaseWindow> default_phase_windows() {
  return {{"phase1", 1, 8}, {"phase2", 9, 12}, {"phase3", 13, 16}};
}

void validate_phase_windows(const std::vector<PhaseWindow>& windows) {
  if (windows.empty()) throw ConfigError("phases: at least one window required");
  int next_week = 1;
  for (const auto& w : windows) {
    if (w.start_week != next_week) {
      throw ConfigError("phases: window '" + w.name + "' starts at week " +
                        std::to_string(w.start_week) + ", expected " +
                        std::to_string(next_week));
    }
    if (w.end_week < w.start_week) {
      throw ConfigError("phases: window '" + w.name + "' ends before it starts");
    }
    next_week = w.end_week + 1;
  }
  if (next_week != 17) {
    throw ConfigError("phases: windows must cover weeks 1-16 exactly");
  }
}

ModelSpec PipelineConfig::spec_for(ModelKind kind) const {
  ModelSpec spec;
  spec.kind = kind;
  spec.seed = derive_seed(seed, 0x4d00u + static_cast<std::uint64_t>(kind));
  return spec;
}

void PipelineConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("config: split.test_fraction must lie in (0, 1)");
  }
  if (cv_k < 2) throw ConfigError("config: cv.k must be >= 2");
  if (cv_repeats < 1) throw ConfigError("config: cv.repeats must be >= 1");
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("config: threshold must lie in [0, 1]");
  }
  if (select_k < 1) throw ConfigError("config: select.k must be >= 1");
  if (risk_rule.failing_grades.empty()) {
    throw ConfigError("config: risk.failing_grades must be nonempty");
  }
  if (models.empty()) throw ConfigError("config: at least one model required");
  if (sampling_modes.empty()) throw ConfigError("config: at least one sampling mode required");
  resampler.validate();
  validate_phase_windows(phases);
}

// ---------------------------------------------------------------------------
// Config file

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s, char delim = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, delim)) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

bool parse_config_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

double parse_config_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_config_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::vector<PhaseWindow> parse_phases(const std::string& v) {
  // phase1:1-8,phase2:9-12,phase3:13-16
  std::vector<PhaseWindow> out;
  for (const auto& part : split_list(v)) {
    const auto colon = part.find(':');
    const auto dash = part.find('-', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || dash == std::string::npos) {
      throw ConfigError("config: bad phase window '" + part + "' (want name:start-end)");
    }
    PhaseWindow w;
    w.name = trim(part.substr(0, colon));
    w.start_week = static_cast<int>(parse_config_u64(trim(part.substr(colon + 1, dash - colon - 1)), "phases"));
    w.end_week = static_cast<int>(parse_config_u64(trim(part.substr(dash + 1)), "phases"));
    out.push_back(std::move(w));
  }
  return out;
}

std::string read_key_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open key file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return trim(ss.str());
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);

  PipelineConfig config;
  std::string key_file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "seed") config.seed = parse_config_u64(value, key);
    else if (key == "roster") config.roster_path = value;
    else if (key == "schema") config.schema_path = value;
    else if (key == "out") config.out_dir = value;
    else if (key == "key_file") key_file = value;
    else if (key == "risk.failing_grades") {
      config.risk_rule.failing_grades.clear();
      for (const auto& tok : split_list(value)) {
        auto g = parse_grade(tok);
        if (!g) throw ConfigError("config: unknown grade token '" + tok + "'");
        config.risk_rule.failing_grades.insert(*g);
      }
    } else if (key == "risk.require_repeat") {
      config.risk_rule.require_repeat = parse_config_bool(value, key);
    } else if (key == "risk.disjunction") {
      config.risk_rule.disjunction = parse_config_bool(value, key);
    } else if (key == "select.method") {
      if (value == "correlation") config.selection_method = RankingMethod::kCorrelation;
      else if (value == "forest_importance") config.selection_method = RankingMethod::kForestImportance;
      else throw ConfigError("config: unknown select.method '" + value + "'");
    } else if (key == "select.k") {
      config.select_k = parse_config_u64(value, key);
    } else if (key == "sampling.modes") {
      config.sampling_modes.clear();
      for (const auto& tok : split_list(value)) {
        auto m = parse_resample_method(tok);
        if (!m) throw ConfigError("config: unknown sampling mode '" + tok + "'");
        config.sampling_modes.push_back(*m);
      }
    } else if (key == "resample.k_neighbors") {
      config.resampler.k_neighbors = parse_config_u64(value, key);
    } else if (key == "resample.target_ratio") {
      config.resampler.target_ratio = parse_config_double(value, key);
    } else if (key == "resample.beta") {
      config.resampler.beta = parse_config_double(value, key);
    } else if (key == "resample.before_split") {
      config.resample_before_split = parse_config_bool(value, key);
    } else if (key == "models") {
      config.models.clear();
      for (const auto& tok : split_list(value)) {
        auto m = parse_model_kind(tok);
        if (!m) throw ConfigError("config: unknown model kind '" + tok + "'");
        config.models.push_back(*m);
      }
    } else if (key == "split.test_fraction") {
      config.test_fraction = parse_config_double(value, key);
    } else if (key == "cv.k") {
      config.cv_k = parse_config_u64(value, key);
    } else if (key == "cv.repeats") {
      config.cv_repeats = parse_config_u64(value, key);
    } else if (key == "threshold") {
      config.threshold = parse_config_double(value, key);
    } else if (key == "phases") {
      config.phases = parse_phases(value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
  }

  // The secret never travels through config values or CLI flags.
  if (const char* env = std::getenv("RISKSCREEN_KEY"); env != nullptr && *env != '\0') {
    config.key = env;
  } else if (!key_file.empty()) {
    config.key = read_key_file(key_file);
  }
  return config;
}

// ---------------------------------------------------------------------------
// Hashing and privacy scan

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void privacy_scan_dir(const std::string& dir,
                      const std::vector<std::string>& raw_identifiers) {
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string which;
    if (contains_identifier(ss.str(), raw_identifiers, &which)) {
      throw PrivacyError("privacy gate: artifact " + entry.path().string() +
                         " contains raw identifier '" + which + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Tables and prediction lists

std::string comparison_table_csv(
    const std::vector<std::pair<std::string, EvaluationReport>>& reports) {
  if (reports.empty()) throw DataError("comparison table: no reports");
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].second.accuracy > reports[best].second.accuracy) best = i;
  }
  std::ostringstream out;
  out << "model,accuracy,precision_at_risk,recall_at_risk,f1_at_risk,auc,best_accuracy\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i].second;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f,%.4f,%s\n",
                  reports[i].first.c_str(), r.accuracy, r.at_risk.precision,
                  r.at_risk.recall, r.at_risk.f1, r.has_roc ? r.auc : 0.0,
                  i == best ? "*" : "");
    out << buf;
  }
  return out.str();
}

std::vector<PredictionList::Entry> PredictionList::at_risk_only() const {
  std::vector<Entry> out;
  for (const auto& e : entries) {
    if (e.label == 1) out.push_back(e);
  }
  return out;
}

namespace {

std::string prediction_csv(const PredictionList& list,
                           const std::vector<PredictionList::Entry>& entries) {
  std::ostringstream out;
  out << "# phase=" << list.phase << " model=" << list.model_id
      << " run=" << list.run_tag << "\n";
  out << "student_id,score,predicted_at_risk\n";
  for (const auto& e : entries) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%d\n", e.id.c_str(), e.score, e.label);
    out << buf;
  }
  return out.str();
}

}  // namespace

std::string PredictionList::full_csv() const { return prediction_csv(*this, entries); }

std::string PredictionList::at_risk_csv() const {
  return prediction_csv(*this, at_risk_only());
}

Roster parse_phase_roster(std::istream& in) {
  auto table = csv::read_csv(in);
  for (const auto& col : table.header) {
    if (col == "name" || col == "email") {
      throw PrivacyError("phase roster carries a raw '" + col +
                         "' column; predictions operate on pseudonymous ids only");
    }
  }
  auto idcol = table.column("student_id");
  if (!idcol) throw DataError("phase roster: missing student_id column");

  Roster roster;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i == *idcol) continue;
    roster.feature_names.push_back(table.header[i]);
    feature_cols.push_back(i);
  }
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    StudentRecord rec;
    rec.student_id = table.rows[r][*idcol];
    if (rec.student_id.empty()) {
      throw DataError("phase roster row " + std::to_string(r + 2) + ": empty student_id");
    }
    if (!seen.insert(rec.student_id).second) {
      throw DataError("phase roster row " + std::to_string(r + 2) +
                      ": duplicate student_id '" + rec.student_id + "'");
    }
    rec.consent = true;
    rec.pseudonymized = true;
    for (auto c : feature_cols) {
      if (table.rows[r][c].empty()) rec.features.push_back(std::nullopt);
      else rec.features.push_back(table.rows[r][c]);
    }
    roster.records.push_back(std::move(rec));
  }
  return roster;
}

Roster load_phase_roster(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open phase roster: " + path);
  return parse_phase_roster(f);
}

// ---------------------------------------------------------------------------
// Deployable model

void DeployableModel::save(const std::string& path) const {
  json j;
  j["format"] = "riskscreen-deployable";
  j["version"] = 1;
  j["model_id"] = model_id;
  j["encoder"] = encoder.to_json();
  j["selected_columns"] = selected_columns;
  j["imputation_fill"] = imputation_fill;
  j["model"] = pipeline.model->to_json();
  j["standardization"] = {{"mean", pipeline.std_params.mean},
                          {"stddev", pipeline.std_params.stddev}};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file: " + path);
  f << j.dump(2) << "\n";
}

DeployableModel DeployableModel::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file: " + path);
  json j;
  f >> j;
  if (j.value("format", "") != "riskscreen-deployable" || j.value("version", 0) != 1) {
    throw DataError("model file: unknown format or version: " + path);
  }
  DeployableModel out;
  out.model_id = j.at("model_id").get<std::string>();
  out.encoder = FeatureEncoder::from_json(j.at("encoder"));
  out.selected_columns = j.at("selected_columns").get<std::vector<std::string>>();
  out.imputation_fill = j.at("imputation_fill").get<std::vector<double>>();
  out.pipeline.model = TrainedModel::from_json(j.at("model"));
  out.pipeline.std_params.mean = j.at("standardization").at("mean").get<std::vector<double>>();
  out.pipeline.std_params.stddev =
      j.at("standardization").at("stddev").get<std::vector<double>>();
  return out;
}

std::vector<double> DeployableModel::score_roster(const Roster& roster,
                                                  WarningSink& warnings) const {
  auto X = encoder.transform(roster, warnings);
  std::vector<std::size_t> indices;
  indices.reserve(selected_columns.size());
  for (const auto& name : selected_columns) {
    auto idx = X.column_index(name);
    if (!idx) throw DataError("predict: encoded column '" + name + "' unavailable");
    indices.push_back(*idx);
  }
  auto X_sel = X.select_columns(indices);
  for (std::size_t c = 0; c < X_sel.cols(); ++c) {
    for (std::size_t r = 0; r < X_sel.rows(); ++r) {
      if (X_sel.is_missing(r, c)) {
        X_sel.at(r, c) = imputation_fill[c];
        X_sel.set_missing(r, c, false);
      }
    }
  }
  return pipeline.score(X_sel, warnings);
}

PredictionList phase_predictions(const DeployableModel& model, const Roster& phase_roster,
                                 const std::string& phase_name, double threshold,
                                 WarningSink& warnings) {
  for (const auto& rec : phase_roster.records) {
    if (!rec.name.empty() || !rec.email.empty()) {
      throw PrivacyError("phase predictions: roster rows carry raw name/email fields");
    }
  }
  PredictionList list;
  list.phase = phase_name;
  list.model_id = model.model_id;
  if (phase_roster.records.empty()) {
    list.run_tag = sha256_hex(model.model_id + "|" + phase_name).substr(0, 12);
    return list;
  }
  const auto scores = model.score_roster(phase_roster, warnings);
  std::string tag_input = model.model_id + "|" + phase_name;
  for (std::size_t i = 0; i < phase_roster.records.size(); ++i) {
    PredictionList::Entry e;
    e.id = phase_roster.records[i].student_id;
    e.score = scores[i];
    e.label = scores[i] >= threshold ? 1 : 0;
    tag_input += "|" + e.id;
    list.entries.push_back(std::move(e));
  }
  list.run_tag = sha256_hex(tag_input).substr(0, 12);
  return list;
}

MispredictionReport misprediction_rate(const PredictionList& predictions,
                                       const std::map<std::string, int>& final_outcomes) {
  MispredictionReport report;
  std::set<std::string> joined_outcomes;
  for (const auto& e : predictions.entries) {
    auto it = final_outcomes.find(e.id);
    if (it == final_outcomes.end()) {
      report.unjoined_prediction_ids.push_back(e.id);
      continue;
    }
    joined_outcomes.insert(e.id);
    ++report.joined;
    if (e.label != it->second) {
      ++report.mismatches;
      if (e.label == 1) report.false_positives.push_back(e.id);
      else report.false_negatives.push_back(e.id);
    }
  }
  for (const auto& [id, label] : final_outcomes) {
    if (!joined_outcomes.count(id)) report.unjoined_outcome_ids.push_back(id);
  }
  if (report.joined == 0) {
    throw DataError("misprediction rate: no ids join between predictions and outcomes");
  }
  report.rate = static_cast<double>(report.mismatches) / static_cast<double>(report.joined);
  return report;
}

std::string MispredictionReport::to_text() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "joined=%zu mismatches=%zu rate=%.1f%%\n", joined,
                mismatches, 100.0 * rate);
  out << buf;
  out << "false_positives:";
  for (const auto& id : false_positives) out << " " << id;
  out << "\nfalse_negatives:";
  for (const auto& id : false_negatives) out << " " << id;
  out << "\nunjoined_predictions:";
  for (const auto& id : unjoined_prediction_ids) out << " " << id;
  out << "\nunjoined_outcomes:";
  for (const auto& id : unjoined_outcome_ids) out << " " << id;
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// run_pipeline

namespace {

struct SourceScore {
  std::string feature;
  double score = 0.0;
};

// Collapses encoded-column scores to roster-feature level: max |score| for
// correlation, summed mass for importances. select_top_k then operates on
// source features, so k=10 means ten roster columns before one-hot expansion.
FeatureRanking aggregate_to_source(const FeatureRanking& ranking,
                                   const FeatureMatrix& matrix) {
  std::map<std::string, double> score;
  std::map<std::string, bool> degenerate;
  for (const auto& e : ranking.entries) {
    auto idx = matrix.column_index(e.feature);
    const std::string source =
        idx ? matrix.column(*idx).source_feature : e.feature;
    const double s = ranking.method == RankingMethod::kCorrelation
                         ? std::fabs(e.score)
                         : e.score;
    if (!score.count(source)) {
      score[source] = 0.0;
      degenerate[source] = true;
    }
    if (ranking.method == RankingMethod::kCorrelation) {
      score[source] = std::max(score[source], s);
    } else {
      score[source] += s;
    }
    degenerate[source] = degenerate[source] && e.degenerate;
  }
  FeatureRanking out;
  out.method = ranking.method;
  for (const auto& [name, s] : score) {
    out.entries.push_back({name, s, degenerate[name]});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     if (a.degenerate != b.degenerate) return b.degenerate;
                     if (a.score != b.score) return a.score > b.score;
                     return a.feature < b.feature;
                   });
  return out;
}

void write_artifact(ArtifactBundle& bundle, const std::string& name,
                    const std::string& content) {
  const fs::path path = fs::path(bundle.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write artifact: " + path.string());
  f << content;
  bundle.manifest[name] = sha256_hex(content);
}

}  // namespace

ArtifactBundle run_pipeline(const PipelineConfig& config) {
  config.validate();
  if (config.key.empty()) {
    throw ConfigError("pseudonymization key missing: set RISKSCREEN_KEY or key_file");
  }
  if (config.out_dir.empty()) throw ConfigError("config: output directory required");

  const bool fresh_dir = !fs::exists(config.out_dir);
  fs::create_directories(config.out_dir);

  ArtifactBundle bundle;
  bundle.out_dir = config.out_dir;

  try {
    WarningSink warnings;

    // ingest
    auto roster = load_roster(config.roster_path);
    auto schema = load_sidecar_schema(config.schema_path);
    std::vector<std::string> raw_identifiers;
    for (const auto& rec : roster.records) {
      raw_identifiers.push_back(rec.student_id);
      if (!rec.name.empty()) raw_identifiers.push_back(rec.name);
      if (!rec.email.empty()) raw_identifiers.push_back(rec.email);
    }
    auto consented = filter_consent(roster, warnings);
    if (consented.records.empty()) {
      throw DataError("stage ingest: no consenting records in roster");
    }
    auto anon = pseudonymize(consented, config.key);
    auto labels = derive_at_risk_labels(anon, config.risk_rule);
    if (labels.positive_count() == 0 || labels.negative_count() == 0) {
      throw DataError("stage ingest: derived labels contain a single class");
    }

    // preprocess
    FeatureEncoder encoder;
    encoder.fit(anon, schema);
    auto X_all = encoder.transform(anon, warnings);
    auto imputation = impute_missing(X_all);
    write_artifact(bundle, "imputation_report.csv", imputation.to_text());

    // feature selection
    auto corr_ranking = rank_by_correlation(X_all, labels);
    ForestParams featsel_forest;
    auto imp_ranking = forest_importance(X_all, labels, featsel_forest,
                                         derive_seed(config.seed, 0xfea7));
    write_artifact(bundle, "ranking_correlation.csv", corr_ranking.to_csv());
    write_artifact(bundle, "ranking_forest.csv", imp_ranking.to_csv());

    const auto& chosen = config.selection_method == RankingMethod::kCorrelation
                             ? corr_ranking
                             : imp_ranking;
    auto source_ranking = aggregate_to_source(chosen, X_all);
    if (config.select_k > source_ranking.entries.size()) {
      throw DataError("stage featsel: select.k=" + std::to_string(config.select_k) +
                      " exceeds " + std::to_string(source_ranking.entries.size()) +
                      " source features");
    }
    auto subset = select_top_k(source_ranking, config.select_k);
    write_artifact(bundle, "selected_features.csv", [&] {
      FeatureRanking sel;
      sel.method = subset.method;
      sel.entries = subset.provenance;
      return sel.to_csv();
    }());

    std::vector<std::size_t> selected_cols;
    for (std::size_t c = 0; c < X_all.cols(); ++c) {
      if (std::find(subset.features.begin(), subset.features.end(),
                    X_all.column(c).source_feature) != subset.features.end()) {
        selected_cols.push_back(c);
      }
    }
    auto X_sel = X_all.select_columns(selected_cols);
    std::vector<std::string> selected_names;
    std::vector<double> fills;
    for (auto c : selected_cols) {
      selected_names.push_back(X_all.column(c).name);
      fills.push_back(imputation.entries[c].fill_value);
    }

    // per sampling mode: split, train, evaluate, cross-validate
    for (auto mode : config.sampling_modes) {
      ResamplerConfig rc = config.resampler;
      rc.method = mode;
      rc.seed = derive_seed(config.seed, 0x5a00u + static_cast<std::uint64_t>(mode));
      const std::string mode_name = resample_method_token(mode);

      // Effective dataset for this mode; the compatibility flag resamples
      // the whole standardized dataset before any split.
      FeatureMatrix X_eff = X_sel;
      LabelVector y_eff = labels;
      ResamplerConfig rc_eff = rc;
      if (config.resample_before_split && mode != ResampleMethod::kNone) {
        std::vector<std::size_t> all_rows(X_sel.rows());
        for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
        auto std_all = fit_standardization(X_sel, all_rows);
        auto X_std = standardize(X_sel, std_all, warnings);
        auto resampled = resample_training_set(X_std, labels, rc, warnings);
        for (const auto& s : resampled.batch.samples) {
          X_eff.append_row(destandardize_row(s.values, std_all));
          y_eff.labels.push_back(1);
        }
        write_artifact(bundle, "synthetics_" + mode_name + ".csv",
                       resampled.batch.provenance_csv());
        rc_eff.method = ResampleMethod::kNone;
      }

      std::vector<std::size_t> train_rows, test_rows;
      stratified_holdout_split(y_eff, config.test_fraction,
                               derive_seed(config.seed, 0x5011), train_rows, test_rows);
      auto X_test = X_eff.select_rows(test_rows);
      LabelVector y_test;
      for (auto i : test_rows) y_test.labels.push_back(y_eff.labels[i]);

      std::vector<std::pair<std::string, EvaluationReport>> mode_reports;
      for (auto kind : config.models) {
        auto spec = config.spec_for(kind);
        const std::string tag = mode_name + "_" + spec.id();

        auto fitted = train_pipeline_model(spec, X_eff, y_eff, train_rows, rc_eff,
                                           warnings);
        if (!config.resample_before_split && mode != ResampleMethod::kNone) {
          write_artifact(bundle, "synthetics_" + tag + ".csv",
                         fitted.synthetics.provenance_csv());
        }
        const auto scores = fitted.score(X_test, warnings);
        auto report = evaluate_predictions(y_test, scores, config.threshold);
        write_artifact(bundle, "report_" + tag + ".txt", report.to_text());
        if (report.has_roc) {
          write_artifact(bundle, "roc_" + tag + ".csv", report.roc_csv());
        }

        DeployableModel deployable;
        deployable.encoder = encoder.restricted(subset.features);
        deployable.selected_columns = selected_names;
        deployable.imputation_fill = fills;
        deployable.pipeline.model = std::move(fitted.model);
        deployable.pipeline.std_params = fitted.std_params;
        deployable.model_id = tag;
        std::ostringstream model_json;
        {
          const std::string path =
              (fs::path(config.out_dir) / ("model_" + tag + ".json")).string();
          deployable.save(path);
          std::ifstream mf(path, std::ios::binary);
          std::stringstream ss;
          ss << mf.rdbuf();
          bundle.manifest["model_" + tag + ".json"] = sha256_hex(ss.str());
        }

        // cross-validation on the effective dataset
        std::ostringstream cv_out;
        cv_out << "repeat,metric,mean,std,folds\n";
        for (std::size_t rep = 0; rep < config.cv_repeats; ++rep) {
          auto plan = stratified_kfold(y_eff, config.cv_k,
                                       derive_seed(config.seed, 0xc0de + rep), warnings);
          auto cv = cross_validate(spec, X_eff, y_eff, plan, rc_eff, config.threshold,
                                   warnings);
          for (const auto& [name, s] : cv.summary) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%zu\n", rep + 1,
                          name.c_str(), s.mean, s.stddev, cv.fold_reports.size());
            cv_out << buf;
          }
        }
        write_artifact(bundle, "cv_" + tag + ".csv", cv_out.str());
        mode_reports.emplace_back(spec.id(), std::move(report));
      }
      write_artifact(bundle, "comparison_" + mode_name + ".csv",
                     comparison_table_csv(mode_reports));
    }

    // manifest (sorted map keys make the bytes deterministic)
    std::ostringstream manifest;
    for (const auto& [name, hash] : bundle.manifest) {
      manifest << hash << "  " << name << "\n";
    }
    {
      const fs::path path = fs::path(config.out_dir) / "manifest.txt";
      std::ofstream f(path, std::ios::binary);
      f << manifest.str();
    }
    bundle.manifest["manifest.txt"] = sha256_hex(manifest.str());

    privacy_scan_dir(config.out_dir, raw_identifiers);
    return bundle;
  } catch (...) {
    // No partial bundles.
    std::error_code ec;
    if (fresh_dir) {
      fs::remove_all(config.out_dir, ec);
    } else {
      for (const auto& [name, hash] : bundle.manifest) {
        fs::remove(fs::path(config.out_dir) / name, ec);
      }
      fs::remove(fs::path(config.out_dir) / "manifest.txt", ec);
    }
    throw;
  }
}

}  // namespace riskscreen
