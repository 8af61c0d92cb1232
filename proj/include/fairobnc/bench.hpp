#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fairobnc/dataset.hpp"
#include "fairobnc/metrics.hpp"

namespace fairobnc {

enum class NoiseTarget { label0, label1, both };

const char* noise_target_name(NoiseTarget t);

struct Scenario {
  NoiseTarget target = NoiseTarget::label0;
  std::string noisy_group;
  std::vector<double> rates{0.05, 0.10, 0.20};

  std::string tag() const;  // "label0:A" style coordinate label
};

using HyperValue = std::variant<long long, double, std::string>;

std::string hyper_value_str(const HyperValue& v);

struct HyperRange {
  enum class Kind { int_range, real_range, choice };
  Kind kind = Kind::real_range;
  long long ilo = 0, ihi = 0, istep = 1;  // int_range: {ilo, ilo+istep, ..., <= ihi}
  double rlo = 0.0, rhi = 0.0;
  bool log_scale = false;
  std::vector<std::string> choices;

  static HyperRange ints(long long lo, long long hi, long long step = 1);
  static HyperRange reals(double lo, double hi, bool log_scale = false);
  static HyperRange pick(std::vector<std::string> options);
};

struct MethodSpec {
  std::string name;  // none|obnc|fair_obnc|massaging|prevalence_sampling|
                     // data_repairer|suppress_correlation|suppress_importance
  std::map<std::string, HyperRange> space;  // overrides merged over defaults
};

// Built-in search space for a method's own knobs (empty for "none").
std::map<std::string, HyperRange> default_space(const std::string& method);
// Search space of the downstream model trained after any method.
std::map<std::string, HyperRange> downstream_space();

// One draw per dimension, each from a substream keyed by (base_seed, method,
// trial, dimension name); draws are independent across dimensions, so
// editing one dimension's range leaves the others' values unchanged.
std::map<std::string, HyperValue> sample_hyperparameters(
    const std::map<std::string, HyperRange>& space, uint64_t base_seed, const std::string& method,
    int trial);

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> csv_path;
  CsvSchema schema;
};

struct ExperimentConfig {
  DatasetSource source;
  std::vector<Scenario> scenarios;
  std::vector<MethodSpec> methods;
  int n_trials = 50;
  uint64_t base_seed = 0;
  std::string out_dir = "results";
  double threshold_fraction = 0.01;
  bool resample_noise_per_trial = true;
  // Appends one 0/1 indicator column per group (minus one reference group)
  // after the IID shuffle, so downstream models can use group membership.
  // Correction sees these columns too; its noise ensemble excludes them.
  bool append_group_feature = true;
  int jobs = 1;
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

struct TrialRecord {
  std::string method;
  std::string scenario;
  double rate = 0.0;
  int trial = 0;
  bool ok = true;
  std::string fail_reason;
  std::map<std::string, HyperValue> hyperparams;
  std::map<std::string, HyperValue> downstream_hyperparams;
  std::optional<ReconstructionMetrics> recon;  // label-editing methods only
  std::optional<ModelMetrics> model;
  std::map<std::string, double> loaded_metrics;  // populated by load_trials_csv

  // Flat metric columns ("recon_score", "tpr", "pred_prev_A", ...).
  std::map<std::string, double> metric_columns() const;
};

struct AggregateRow {
  std::string method;
  std::string scenario;
  double rate = 0.0;
  int n_trials = 0;
  int n_ok = 0;
  std::map<std::string, double> means;  // per metric column, over ok trials
};

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

// The trials/aggregate CSV metric columns are a pure function of the group
// ids, never of which methods ran, so adding a method leaves every existing
// row byte-identical.
std::vector<std::string> metric_schema(const std::vector<std::string>& group_ids);

// Full sweep: scenarios x rates x trials x methods. Writes trials.csv,
// aggregate.csv, and plot_data.csv under config.out_dir. A failing trial is
// recorded with ok=0 and the run continues.
std::vector<TrialRecord> run(const ExperimentConfig& config);

// Rebuilds aggregate.csv and plot_data.csv from an existing trials.csv.
void report_from_trials(const std::string& trials_csv, const std::string& out_dir);

struct TrialsFile {
  std::vector<TrialRecord> records;
  std::vector<std::string> metric_cols;
};

TrialsFile load_trials_csv(const std::string& path);
void write_trials_csv(const std::vector<TrialRecord>& records, const std::string& path,
                      const std::vector<std::string>& metric_cols);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path,
                         const std::vector<std::string>& metric_cols);
void write_plot_csv(const std::vector<AggregateRow>& rows, const std::string& path);

}  // namespace fairobnc
