#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairobnc/audit.hpp"
#include "fairobnc/baselines.hpp"
#include "fairobnc/bench.hpp"
#include "fairobnc/correction.hpp"
#include "fairobnc/dataset.hpp"
#include "fairobnc/errors.hpp"
#include "fairobnc/metrics.hpp"
#include "fairobnc/rng.hpp"

namespace {

using namespace fairobnc;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text << '\n';
  if (!out) throw DataError("failed writing " + path);
}

std::map<std::string, double> parse_group_fractions(const std::string& arg) {
  std::map<std::string, double> out;
  std::string token;
  std::stringstream ss(arg);
  while (std::getline(ss, token, ',')) {
    auto eq = token.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected NAME=FRACTION in --groups, got '" + token + "'");
    std::string name = token.substr(0, eq);
    double frac = 0.0;
    try {
      frac = std::stod(token.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad fraction in --groups: '" + token + "'");
    }
    if (name.empty()) throw ConfigError("empty group name in --groups");
    if (!out.emplace(name, frac).second)
      throw ConfigError("duplicate group in --groups: " + name);
  }
  if (out.empty()) throw ConfigError("--groups must name at least one group");
  return out;
}

struct CorrectOptions {
  std::string in_path, out_path, report_path, method;
  CsvSchema schema;

  double max_flip_rate = 0.2;
  double disparity_target = 0.05;
  double margin_threshold = 0.0;
  std::string margin_mode = "vote";
  std::vector<std::string> excluded;
  double k_fraction = 0.2;
  std::string strategy = "undersample";
  double repair_level = 1.0;
  double corr_threshold = 0.5;
  double stop_auc = 0.6;

  int n_learners = 51;
  int max_depth = 8;
  int min_leaf = 5;
  double bootstrap_fraction = 1.0;
  double feature_subsample = 1.0;
  uint64_t seed = 0;
};

EnsembleParams ensemble_of(const CorrectOptions& o) {
  EnsembleParams p;
  p.n_learners = o.n_learners;
  p.max_depth = o.max_depth;
  p.min_leaf = o.min_leaf;
  p.bootstrap_fraction = o.bootstrap_fraction;
  p.feature_subsample = o.feature_subsample;
  p.seed = o.seed;
  return p;
}

int run_correct(const CorrectOptions& o) {
  Dataset ds = load_csv(o.in_path, o.schema);

  Dataset out_ds;
  std::string report;
  if (o.method == "fair_obnc") {
    FairObncParams p;
    p.max_flip_rate = o.max_flip_rate;
    p.disparity_target = o.disparity_target;
    p.margin_threshold = o.margin_threshold;
    if (o.margin_mode == "vote")
      p.margin_mode = MarginMode::vote;
    else if (o.margin_mode == "score")
      p.margin_mode = MarginMode::score;
    else
      throw ConfigError("--margin-mode must be vote or score");
    p.excluded_features.insert(o.excluded.begin(), o.excluded.end());
    p.ensemble = ensemble_of(o);
    CorrectionResult res = fair_obnc(ds, p);
    out_ds = ds;
    out_ds.labels = std::move(res.labels);
    report = report_json(res.report);
  } else if (o.method == "obnc") {
    CorrectionResult res = obnc(ds, o.k_fraction, ensemble_of(o));
    out_ds = ds;
    out_ds.labels = std::move(res.labels);
    report = report_json(res.report);
  } else if (o.method == "massaging") {
    CorrectionResult res = massaging(ds, ensemble_of(o));
    out_ds = ds;
    out_ds.labels = std::move(res.labels);
    report = report_json(res.report);
  } else if (o.method == "prevalence_sampling") {
    PrevalenceSamplingParams p;
    if (o.strategy == "undersample")
      p.strategy = SamplingStrategy::undersample;
    else if (o.strategy == "oversample")
      p.strategy = SamplingStrategy::oversample;
    else
      throw ConfigError("--strategy must be undersample or oversample");
    p.seed = o.seed;
    SamplingResult res = prevalence_sampling(ds, p);
    out_ds = std::move(res.dataset);
    report = report_json(res.report);
  } else if (o.method == "data_repairer") {
    RepairResult res = data_repairer(ds, o.repair_level);
    out_ds = std::move(res.dataset);
    report = report_json(res.report);
  } else if (o.method == "suppress_correlation") {
    SuppressionResult res = suppress_correlation(ds, o.corr_threshold);
    out_ds = std::move(res.dataset);
    report = report_json(res.report);
  } else if (o.method == "suppress_importance") {
    SuppressImportanceParams p;
    p.stop_auc = o.stop_auc;
    p.probe = ensemble_of(o);
    SuppressionResult res = suppress_importance(ds, p);
    out_ds = std::move(res.dataset);
    report = report_json(res.report);
  } else {
    throw ConfigError("unknown method: " + o.method);
  }

  save_csv(out_ds, o.out_path);
  if (!o.report_path.empty()) write_text(o.report_path, report);
  std::cout << "wrote " << o.out_path << "\n";
  return 0;
}

void add_schema_flags(CLI::App* cmd, CsvSchema& schema) {
  cmd->add_option("--label-column", schema.label, "Label column name");
  cmd->add_option("--group-column", schema.group, "Group column name");
  cmd->add_option("--split-column", schema.split, "Split column name");
  cmd->add_option("--clean-column", schema.clean_label, "Clean label column name");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware label noise correction toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset CSV");
  std::string gen_out;
  std::string gen_groups = "A=0.5,B=0.5";
  SyntheticSpec gen_spec;
  gen_spec.n_rows = 10000;
  gen_spec.n_features = 6;
  bool gen_iid = false;
  uint64_t gen_iid_seed = 0;
  bool gen_iid_seed_set = false;
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--rows", gen_spec.n_rows, "Number of rows");
  gen->add_option("--features", gen_spec.n_features, "Number of feature columns");
  gen->add_option("--groups", gen_groups, "Group fractions, e.g. A=0.5,B=0.5");
  gen->add_option("--prevalence", gen_spec.base_prevalence, "Positive-label rate");
  gen->add_option("--separation", gen_spec.class_separation, "Distance between class means");
  gen->add_option("--seed", gen_spec.seed, "Generator seed");
  gen->add_flag("--iid", gen_iid, "Shuffle group/split columns after generating");
  gen->add_option("--iid-seed", gen_iid_seed, "Seed for the IID shuffle (defaults to --seed)")
      ->each([&](const std::string&) { gen_iid_seed_set = true; });

  // inject
  auto* inj = app.add_subcommand("inject", "Inject group-targeted label noise");
  std::string inj_in, inj_out, inj_group, inj_target = "label0";
  double inj_rate = 0.1;
  uint64_t inj_seed = 0;
  CsvSchema inj_schema;
  inj->add_option("--in", inj_in, "Input CSV path")->required();
  inj->add_option("--out", inj_out, "Output CSV path")->required();
  inj->add_option("--group", inj_group, "Group receiving noise")->required();
  inj->add_option("--target", inj_target, "Noisy class: label0, label1, or both");
  inj->add_option("--rate", inj_rate, "Flip probability")->required();
  inj->add_option("--seed", inj_seed, "Noise seed");
  add_schema_flags(inj, inj_schema);

  // correct
  auto* cor = app.add_subcommand("correct", "Apply a correction or pre-processing method");
  CorrectOptions co;
  cor->add_option("--in", co.in_path, "Input CSV path")->required();
  cor->add_option("--out", co.out_path, "Output CSV path")->required();
  cor->add_option("--report", co.report_path, "Report JSON path");
  cor->add_option("--method", co.method, "Method name")->required();
  add_schema_flags(cor, co.schema);
  cor->add_option("--max-flip-rate", co.max_flip_rate, "fair_obnc: flip cap fraction");
  cor->add_option("--disparity-target", co.disparity_target, "fair_obnc: prevalence band width");
  cor->add_option("--margin-threshold", co.margin_threshold, "fair_obnc: minimum |margin|");
  cor->add_option("--margin-mode", co.margin_mode, "fair_obnc: vote or score");
  cor->add_option("--exclude", co.excluded, "fair_obnc: features hidden from the noise model");
  cor->add_option("--k-fraction", co.k_fraction, "obnc: fraction of train rows to flip");
  cor->add_option("--strategy", co.strategy, "prevalence_sampling: undersample or oversample");
  cor->add_option("--repair-level", co.repair_level, "data_repairer: blend toward pooled");
  cor->add_option("--threshold", co.corr_threshold, "suppress_correlation: |corr| cutoff");
  cor->add_option("--stop-auc", co.stop_auc, "suppress_importance: stop once probe AUC <= this");
  cor->add_option("--n-learners", co.n_learners, "Ensemble size");
  cor->add_option("--max-depth", co.max_depth, "Tree depth cap");
  cor->add_option("--min-leaf", co.min_leaf, "Minimum rows per leaf");
  cor->add_option("--bootstrap-fraction", co.bootstrap_fraction, "Bootstrap sample fraction");
  cor->add_option("--feature-subsample", co.feature_subsample, "Per-tree feature fraction");
  cor->add_option("--seed", co.seed, "Ensemble seed");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  std::string run_config;
  uint64_t run_seed = 0;
  bool run_seed_set = false;
  std::string run_out_dir;
  int run_jobs = 0;
  run_cmd->add_option("--config", run_config, "Experiment config JSON")->required();
  run_cmd->add_option("--seed", run_seed, "Override base_seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run_cmd->add_option("--out-dir", run_out_dir, "Override output directory");
  run_cmd->add_option("--jobs", run_jobs, "Worker count (reserved; runs serially)");

  // report
  auto* rep = app.add_subcommand("report", "Re-aggregate an existing trials.csv");
  std::string rep_trials, rep_out_dir = "results";
  rep->add_option("--trials", rep_trials, "trials.csv path")->required();
  rep->add_option("--out-dir", rep_out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      gen_spec.group_fractions = parse_group_fractions(gen_groups);
      Dataset ds = generate_synthetic(gen_spec);
      if (gen_iid) ds = make_iid(ds, gen_iid_seed_set ? gen_iid_seed : gen_spec.seed);
      save_csv(ds, gen_out);
      std::cout << "wrote " << gen_out << " (" << ds.n_rows() << " rows)\n";
    } else if (inj->parsed()) {
      Dataset ds = load_csv(inj_in, inj_schema);
      NoiseSpec spec;
      spec.seed = inj_seed;
      if (inj_target == "label0" || inj_target == "both") spec.rates[{inj_group, 0}] = inj_rate;
      if (inj_target == "label1" || inj_target == "both") spec.rates[{inj_group, 1}] = inj_rate;
      if (spec.rates.empty())
        throw ConfigError("--target must be label0, label1, or both");
      Dataset noisy = inject_noise(ds, spec);
      save_csv(noisy, inj_out);
      long long flips = 0;
      for (size_t r = 0; r < noisy.n_rows(); ++r)
        if (noisy.labels[r] != ds.labels[r]) ++flips;
      std::cout << "wrote " << inj_out << " (" << flips << " labels flipped)\n";
    } else if (cor->parsed()) {
      return run_correct(co);
    } else if (run_cmd->parsed()) {
      ExperimentConfig cfg = config_from_json_file(run_config);
      if (run_seed_set) cfg.base_seed = run_seed;
      if (!run_out_dir.empty()) cfg.out_dir = run_out_dir;
      if (run_jobs > 0) cfg.jobs = run_jobs;
      std::vector<TrialRecord> records = run(cfg);
      long long failed = 0;
      for (const auto& r : records)
        if (!r.ok) ++failed;
      std::cout << "wrote " << cfg.out_dir << "/trials.csv (" << records.size() << " trials, "
                << failed << " failed)\n";
    } else if (rep->parsed()) {
      report_from_trials(rep_trials, rep_out_dir);
      std::cout << "wrote " << rep_out_dir << "/aggregate.csv\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
