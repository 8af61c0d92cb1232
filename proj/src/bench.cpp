#include "fairobnc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "fairobnc/audit.hpp"
#include "fairobnc/baselines.hpp"
#include "fairobnc/correction.hpp"
#include "fairobnc/errors.hpp"
#include "fairobnc/rng.hpp"
#include "json.hpp"

namespace fairobnc {

namespace {

const std::set<std::string> kKnownMethods = {
    "none",          "obnc",
    "fair_obnc",     "massaging",
    "prevalence_sampling", "data_repairer",
    "suppress_correlation", "suppress_importance"};

bool edits_labels(const std::string& method) {
  return method == "obnc" || method == "fair_obnc" || method == "massaging";
}

std::map<std::string, HyperRange> ensemble_dims() {
  return {
      {"n_learners", HyperRange::ints(11, 101, 2)},  // odd counts avoid vote ties
      {"max_depth", HyperRange::ints(3, 12)},
      {"bootstrap_fraction", HyperRange::reals(0.5, 1.0)},
  };
}

long long hyper_int(const std::map<std::string, HyperValue>& hp, const std::string& name,
                    long long fallback) {
  auto it = hp.find(name);
  if (it == hp.end()) return fallback;
  if (const auto* v = std::get_if<long long>(&it->second)) return *v;
  throw ConfigError("hyperparameter '" + name + "' must be an integer");
}

double hyper_real(const std::map<std::string, HyperValue>& hp, const std::string& name,
                  double fallback) {
  auto it = hp.find(name);
  if (it == hp.end()) return fallback;
  if (const auto* v = std::get_if<double>(&it->second)) return *v;
  if (const auto* v = std::get_if<long long>(&it->second)) return static_cast<double>(*v);
  throw ConfigError("hyperparameter '" + name + "' must be numeric");
}

std::string hyper_str(const std::map<std::string, HyperValue>& hp, const std::string& name,
                      const std::string& fallback) {
  auto it = hp.find(name);
  if (it == hp.end()) return fallback;
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError("hyperparameter '" + name + "' must be a string");
}

EnsembleParams ensemble_from_hypers(const std::map<std::string, HyperValue>& hp, uint64_t seed) {
  EnsembleParams p;
  p.n_learners = static_cast<int>(hyper_int(hp, "n_learners", p.n_learners));
  p.max_depth = static_cast<int>(hyper_int(hp, "max_depth", p.max_depth));
  p.min_leaf = static_cast<int>(hyper_int(hp, "min_leaf", p.min_leaf));
  p.bootstrap_fraction = hyper_real(hp, "bootstrap_fraction", p.bootstrap_fraction);
  p.feature_subsample = hyper_real(hp, "feature_subsample", p.feature_subsample);
  p.seed = seed;
  return p;
}

nlohmann::json hyper_map_json(const std::map<std::string, HyperValue>& hp) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [name, value] : hp) {
    if (const auto* v = std::get_if<long long>(&value))
      doc[name] = *v;
    else if (const auto* v = std::get_if<double>(&value))
      doc[name] = *v;
    else
      doc[name] = std::get<std::string>(value);
  }
  return doc;
}

std::map<std::string, HyperValue> hyper_map_from_json(const nlohmann::json& doc) {
  std::map<std::string, HyperValue> hp;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& v = it.value();
    if (v.is_number_integer())
      hp[it.key()] = v.get<long long>();
    else if (v.is_number())
      hp[it.key()] = v.get<double>();
    else if (v.is_string())
      hp[it.key()] = v.get<std::string>();
    else
      throw DataError("unsupported hyperparameter value for '" + it.key() + "'");
  }
  return hp;
}

struct AppliedMethod {
  Dataset dataset;
  std::optional<std::vector<int>> corrected;  // aligned with dataset rows
};

AppliedMethod apply_method(const Dataset& noisy, const std::string& method,
                           const std::map<std::string, HyperValue>& hp, uint64_t method_seed,
                           const std::set<std::string>& indicator_features) {
  AppliedMethod out;
  if (method == "none") {
    out.dataset = noisy;
    return out;
  }
  if (method == "obnc") {
    double k = hyper_real(hp, "k_fraction", 0.2);
    CorrectionResult res = obnc(noisy, k, ensemble_from_hypers(hp, method_seed));
    out.dataset = noisy;
    out.dataset.labels = res.labels;
    out.corrected = std::move(res.labels);
    return out;
  }
  if (method == "fair_obnc") {
    FairObncParams p;
    p.max_flip_rate = hyper_real(hp, "max_flip_rate", p.max_flip_rate);
    p.disparity_target = hyper_real(hp, "disparity_target", p.disparity_target);
    p.margin_threshold = hyper_real(hp, "margin_threshold", p.margin_threshold);
    std::string mode = hyper_str(hp, "margin_mode", "vote");
    if (mode != "vote" && mode != "score") throw ConfigError("margin_mode must be vote or score");
    p.margin_mode = mode == "vote" ? MarginMode::vote : MarginMode::score;
    p.excluded_features = indicator_features;
    p.ensemble = ensemble_from_hypers(hp, method_seed);
    CorrectionResult res = fair_obnc(noisy, p);
    out.dataset = noisy;
    out.dataset.labels = res.labels;
    out.corrected = std::move(res.labels);
    return out;
  }
  if (method == "massaging") {
    CorrectionResult res = massaging(noisy, ensemble_from_hypers(hp, method_seed));
    out.dataset = noisy;
    out.dataset.labels = res.labels;
    out.corrected = std::move(res.labels);
    return out;
  }
  if (method == "prevalence_sampling") {
    PrevalenceSamplingParams p;
    std::string strategy = hyper_str(hp, "strategy", "undersample");
    if (strategy != "undersample" && strategy != "oversample")
      throw ConfigError("strategy must be undersample or oversample");
    p.strategy =
        strategy == "undersample" ? SamplingStrategy::undersample : SamplingStrategy::oversample;
    p.seed = method_seed;
    out.dataset = prevalence_sampling(noisy, p).dataset;
    return out;
  }
  if (method == "data_repairer") {
    out.dataset = data_repairer(noisy, hyper_real(hp, "repair_level", 1.0)).dataset;
    return out;
  }
  if (method == "suppress_correlation") {
    out.dataset = suppress_correlation(noisy, hyper_real(hp, "threshold", 0.5)).dataset;
    return out;
  }
  if (method == "suppress_importance") {
    SuppressImportanceParams p;
    p.stop_auc = hyper_real(hp, "stop_auc", p.stop_auc);
    p.probe.n_learners = 31;
    p.probe.max_depth = 6;
    p.probe.min_leaf = 20;
    p.probe.seed = method_seed;
    out.dataset = suppress_importance(noisy, p).dataset;
    return out;
  }
  throw ConfigError("unknown method: " + method);
}

std::string coord_tag(size_t scenario_idx, size_t rate_idx, int trial) {
  return std::to_string(scenario_idx) + "." + std::to_string(rate_idx) + "." +
         std::to_string(trial);
}

std::string format_cell(double v) { return csv::format_double(v); }

double parse_cell_double(const std::string& s, const std::string& what) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("bad numeric field '" + s + "' for " + what);
  return out;
}

}  // namespace

const char* noise_target_name(NoiseTarget t) {
  switch (t) {
    case NoiseTarget::label0: return "label0";
    case NoiseTarget::label1: return "label1";
    case NoiseTarget::both: return "both";
  }
  return "label0";
}

std::string Scenario::tag() const {
  return std::string(noise_target_name(target)) + ":" + noisy_group;
}

std::string hyper_value_str(const HyperValue& v) {
  if (const auto* i = std::get_if<long long>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return csv::format_double(*d);
  return std::get<std::string>(v);
}

HyperRange HyperRange::ints(long long lo, long long hi, long long step) {
  HyperRange r;
  r.kind = Kind::int_range;
  r.ilo = lo;
  r.ihi = hi;
  r.istep = step;
  return r;
}

HyperRange HyperRange::reals(double lo, double hi, bool log_scale) {
  HyperRange r;
  r.kind = Kind::real_range;
  r.rlo = lo;
  r.rhi = hi;
  r.log_scale = log_scale;
  return r;
}

HyperRange HyperRange::pick(std::vector<std::string> options) {
  HyperRange r;
  r.kind = Kind::choice;
  r.choices = std::move(options);
  return r;
}

std::map<std::string, HyperRange> default_space(const std::string& method) {
  if (!kKnownMethods.count(method)) throw ConfigError("unknown method: " + method);
  if (method == "none") return {};
  if (method == "prevalence_sampling")
    return {{"strategy", HyperRange::pick({"undersample", "oversample"})}};
  if (method == "data_repairer") return {{"repair_level", HyperRange::reals(0.0, 1.0)}};
  if (method == "suppress_correlation") return {{"threshold", HyperRange::reals(0.1, 0.9)}};
  if (method == "suppress_importance") return {{"stop_auc", HyperRange::reals(0.55, 0.8)}};

  std::map<std::string, HyperRange> space = ensemble_dims();
  if (method == "obnc") {
    space["k_fraction"] = HyperRange::reals(0.05, 0.5);
  } else if (method == "fair_obnc") {
    space["max_flip_rate"] = HyperRange::reals(0.05, 0.5);
    space["disparity_target"] = HyperRange::reals(0.0, 0.1);
    space["margin_threshold"] = HyperRange::reals(0.0, 0.4);
    space["margin_mode"] = HyperRange::pick({"vote", "score"});
  }
  return space;  // massaging: the ranker's ensemble dimensions only
}

std::map<std::string, HyperRange> downstream_space() { return ensemble_dims(); }

std::map<std::string, HyperValue> sample_hyperparameters(
    const std::map<std::string, HyperRange>& space, uint64_t base_seed, const std::string& method,
    int trial) {
  std::map<std::string, HyperValue> out;
  for (const auto& [name, range] : space) {
    // One substream per dimension: editing one range never changes the
    // values drawn for the others.
    Rng rng(base_seed, "hyper." + method + "." + name, static_cast<uint64_t>(trial));
    switch (range.kind) {
      case HyperRange::Kind::int_range: {
        if (range.istep < 1) throw ConfigError("step must be >= 1 for " + name);
        if (range.ihi < range.ilo) throw ConfigError("empty integer range for " + name);
        long long count = (range.ihi - range.ilo) / range.istep + 1;
        out[name] = range.ilo +
                    range.istep * static_cast<long long>(rng.next_below(
                                      static_cast<uint64_t>(count)));
        break;
      }
      case HyperRange::Kind::real_range: {
        if (range.rhi < range.rlo) throw ConfigError("empty real range for " + name);
        double u = rng.next_double();
        if (range.log_scale) {
          if (range.rlo <= 0.0) throw ConfigError("log range needs positive bounds for " + name);
          out[name] = std::exp(std::log(range.rlo) +
                               u * (std::log(range.rhi) - std::log(range.rlo)));
        } else {
          out[name] = range.rlo + u * (range.rhi - range.rlo);
        }
        break;
      }
      case HyperRange::Kind::choice: {
        if (range.choices.empty()) throw ConfigError("empty choice list for " + name);
        out[name] = range.choices[rng.next_below(range.choices.size())];
        break;
      }
    }
  }
  return out;
}

namespace {

HyperRange range_from_json(const std::string& name, const nlohmann::json& j,
                           const std::map<std::string, HyperRange>& defaults) {
  if (!j.is_object()) throw ConfigError("space entry for '" + name + "' must be an object");
  if (j.contains("choices")) {
    auto opts = j.at("choices").get<std::vector<std::string>>();
    return HyperRange::pick(std::move(opts));
  }
  if (!j.contains("min") || !j.contains("max"))
    throw ConfigError("space entry for '" + name + "' needs min and max");

  bool integral = j.contains("step");
  auto it = defaults.find(name);
  if (!integral && it != defaults.end()) integral = it->second.kind == HyperRange::Kind::int_range;

  if (integral) {
    if (!j.at("min").is_number_integer() || !j.at("max").is_number_integer())
      throw ConfigError("integer range for '" + name + "' needs integral bounds");
    long long step = j.value("step", 1LL);
    return HyperRange::ints(j.at("min").get<long long>(), j.at("max").get<long long>(), step);
  }
  return HyperRange::reals(j.at("min").get<double>(), j.at("max").get<double>(),
                           j.value("log", false));
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;

  const auto& source = doc.at("source");
  if (source.contains("synthetic") == source.contains("csv"))
    throw ConfigError("source must hold exactly one of 'synthetic' or 'csv'");
  if (source.contains("synthetic")) {
    const auto& s = source.at("synthetic");
    SyntheticSpec spec;
    spec.n_rows = s.at("n_rows").get<size_t>();
    spec.n_features = s.at("n_features").get<size_t>();
    for (auto it = s.at("group_fractions").begin(); it != s.at("group_fractions").end(); ++it)
      spec.group_fractions[it.key()] = it.value().get<double>();
    spec.base_prevalence = s.value("base_prevalence", spec.base_prevalence);
    spec.class_separation = s.value("class_separation", spec.class_separation);
    spec.seed = s.value("seed", spec.seed);
    cfg.source.synthetic = spec;
  } else {
    const auto& c = source.at("csv");
    cfg.source.csv_path = c.at("path").get<std::string>();
    cfg.source.schema.label = c.value("label", cfg.source.schema.label);
    cfg.source.schema.group = c.value("group", cfg.source.schema.group);
    cfg.source.schema.split = c.value("split", cfg.source.schema.split);
    cfg.source.schema.clean_label = c.value("clean_label", cfg.source.schema.clean_label);
  }

  for (const auto& js : doc.at("scenarios")) {
    Scenario sc;
    std::string target = js.at("target").get<std::string>();
    if (target == "label0")
      sc.target = NoiseTarget::label0;
    else if (target == "label1")
      sc.target = NoiseTarget::label1;
    else if (target == "both")
      sc.target = NoiseTarget::both;
    else
      throw ConfigError("scenario target must be label0, label1, or both");
    sc.noisy_group = js.at("group").get<std::string>();
    if (sc.noisy_group.empty()) throw ConfigError("scenario group must be non-empty");
    if (js.contains("rates")) sc.rates = js.at("rates").get<std::vector<double>>();
    if (sc.rates.empty()) throw ConfigError("scenario needs at least one rate");
    for (double r : sc.rates)
      if (r < 0.0 || r > 1.0) throw ConfigError("scenario rates must lie in [0, 1]");
    cfg.scenarios.push_back(std::move(sc));
  }
  if (cfg.scenarios.empty()) throw ConfigError("config needs at least one scenario");

  std::set<std::string> seen_methods;
  for (const auto& jm : doc.at("methods")) {
    MethodSpec m;
    if (jm.is_string())
      m.name = jm.get<std::string>();
    else {
      m.name = jm.at("name").get<std::string>();
      if (jm.contains("space")) {
        auto defaults = default_space(m.name);
        for (auto it = jm.at("space").begin(); it != jm.at("space").end(); ++it)
          m.space[it.key()] = range_from_json(it.key(), it.value(), defaults);
      }
    }
    if (!kKnownMethods.count(m.name)) throw ConfigError("unknown method: " + m.name);
    if (!seen_methods.insert(m.name).second)
      throw ConfigError("duplicate method: " + m.name);
    cfg.methods.push_back(std::move(m));
  }
  if (cfg.methods.empty()) throw ConfigError("config needs at least one method");

  cfg.n_trials = doc.value("n_trials", cfg.n_trials);
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  cfg.base_seed = doc.value("base_seed", cfg.base_seed);
  cfg.out_dir = doc.value("out_dir", cfg.out_dir);
  cfg.threshold_fraction = doc.value("threshold_fraction", cfg.threshold_fraction);
  if (cfg.threshold_fraction <= 0.0 || cfg.threshold_fraction > 1.0)
    throw ConfigError("threshold_fraction must lie in (0, 1]");
  cfg.resample_noise_per_trial =
      doc.value("resample_noise_per_trial", cfg.resample_noise_per_trial);
  cfg.append_group_feature = doc.value("append_group_feature", cfg.append_group_feature);
  cfg.jobs = doc.value("jobs", cfg.jobs);
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  return cfg;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse failed: ") + e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config invalid: ") + e.what());
  }
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::map<std::string, double> TrialRecord::metric_columns() const {
  std::map<std::string, double> out = loaded_metrics;
  if (recon) {
    out["recon_score"] = recon->score;
    if (recon->fpr) out["recon_fpr"] = *recon->fpr;
    if (recon->fnr) out["recon_fnr"] = *recon->fnr;
    for (const auto& [id, rates] : recon->per_group) {
      if (rates.fpr) out["recon_fpr_" + id] = *rates.fpr;
      if (rates.fnr) out["recon_fnr_" + id] = *rates.fnr;
    }
  }
  if (model) {
    out["tpr"] = model->tpr;
    out["dp_ratio"] = model->dp_ratio;
    out["threshold"] = model->threshold;
    for (const auto& [id, p] : model->pred_prevalence) out["pred_prev_" + id] = p;
  }
  return out;
}

std::vector<std::string> metric_schema(const std::vector<std::string>& group_ids) {
  std::vector<std::string> cols = {"recon_score", "recon_fpr", "recon_fnr"};
  for (const auto& id : group_ids) {
    cols.push_back("recon_fpr_" + id);
    cols.push_back("recon_fnr_" + id);
  }
  cols.push_back("tpr");
  cols.push_back("dp_ratio");
  cols.push_back("threshold");
  for (const auto& id : group_ids) cols.push_back("pred_prev_" + id);
  return cols;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
  struct Acc {
    int n_trials = 0;
    int n_ok = 0;
    std::map<std::string, std::pair<double, int>> sums;  // column -> (sum, count)
  };
  std::map<std::tuple<std::string, double, std::string>, Acc> by_coord;  // (scenario, rate, method)
  for (const auto& rec : records) {
    Acc& acc = by_coord[{rec.scenario, rec.rate, rec.method}];
    ++acc.n_trials;
    if (!rec.ok) continue;
    ++acc.n_ok;
    for (const auto& [col, v] : rec.metric_columns()) {
      auto& [sum, count] = acc.sums[col];
      sum += v;
      count += 1;
    }
  }

  std::vector<AggregateRow> rows;
  for (const auto& [coord, acc] : by_coord) {
    AggregateRow row;
    row.scenario = std::get<0>(coord);
    row.rate = std::get<1>(coord);
    row.method = std::get<2>(coord);
    row.n_trials = acc.n_trials;
    row.n_ok = acc.n_ok;
    for (const auto& [col, sc] : acc.sums)
      row.means[col] = sc.first / static_cast<double>(sc.second);
    rows.push_back(std::move(row));
  }
  return rows;  // map iteration: sorted by (scenario, rate, method)
}

void write_trials_csv(const std::vector<TrialRecord>& records, const std::string& path,
                      const std::vector<std::string>& metric_cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  std::vector<std::string> rec = {"method",      "scenario",    "rate",
                                  "trial",       "ok",          "fail_reason",
                                  "hyperparams", "downstream_hyperparams"};
  rec.insert(rec.end(), metric_cols.begin(), metric_cols.end());
  csv::write_record(out, rec);

  for (const auto& r : records) {
    rec.clear();
    rec.push_back(r.method);
    rec.push_back(r.scenario);
    rec.push_back(format_cell(r.rate));
    rec.push_back(std::to_string(r.trial));
    rec.push_back(r.ok ? "1" : "0");
    rec.push_back(r.fail_reason);
    rec.push_back(hyper_map_json(r.hyperparams).dump());
    rec.push_back(hyper_map_json(r.downstream_hyperparams).dump());
    auto cols = r.metric_columns();
    for (const auto& name : metric_cols) {
      auto it = cols.find(name);
      rec.push_back(it == cols.end() ? "" : format_cell(it->second));
    }
    csv::write_record(out, rec);
  }
  if (!out) throw DataError("failed writing " + path);
}

TrialsFile load_trials_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!csv::read_record(in, line)) throw DataError("empty trials file: " + path);
  std::vector<std::string> header = csv::split_record(line);

  const std::vector<std::string> fixed = {"method",      "scenario",    "rate",
                                          "trial",       "ok",          "fail_reason",
                                          "hyperparams", "downstream_hyperparams"};
  if (header.size() < fixed.size())
    throw DataError("trials file header too short: " + path);
  for (size_t i = 0; i < fixed.size(); ++i)
    if (header[i] != fixed[i])
      throw DataError("unexpected trials column '" + header[i] + "', wanted '" + fixed[i] + "'");

  TrialsFile out;
  out.metric_cols.assign(header.begin() + static_cast<ptrdiff_t>(fixed.size()), header.end());

  size_t row_no = 0;
  while (csv::read_record(in, line)) {
    if (line.empty()) continue;
    ++row_no;
    std::vector<std::string> fields = csv::split_record(line);
    if (fields.size() != header.size())
      throw DataError("bad field count at trials row " + std::to_string(row_no));

    TrialRecord rec;
    rec.method = fields[0];
    rec.scenario = fields[1];
    rec.rate = parse_cell_double(fields[2], "rate");
    rec.trial = static_cast<int>(parse_cell_double(fields[3], "trial"));
    rec.ok = fields[4] == "1";
    rec.fail_reason = fields[5];
    try {
      rec.hyperparams = hyper_map_from_json(nlohmann::json::parse(fields[6]));
      rec.downstream_hyperparams = hyper_map_from_json(nlohmann::json::parse(fields[7]));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad hyperparameter JSON at trials row " + std::to_string(row_no) + ": " +
                      e.what());
    }
    for (size_t c = 0; c < out.metric_cols.size(); ++c) {
      const std::string& cell = fields[fixed.size() + c];
      if (cell.empty()) continue;
      rec.loaded_metrics[out.metric_cols[c]] = parse_cell_double(cell, out.metric_cols[c]);
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path,
                         const std::vector<std::string>& metric_cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  std::vector<std::string> rec = {"scenario", "rate", "method", "n_trials", "n_ok"};
  for (const auto& name : metric_cols) rec.push_back("mean_" + name);
  csv::write_record(out, rec);

  for (const auto& row : rows) {
    rec.clear();
    rec.push_back(row.scenario);
    rec.push_back(format_cell(row.rate));
    rec.push_back(row.method);
    rec.push_back(std::to_string(row.n_trials));
    rec.push_back(std::to_string(row.n_ok));
    for (const auto& name : metric_cols) {
      auto it = row.means.find(name);
      rec.push_back(it == row.means.end() ? "" : format_cell(it->second));
    }
    csv::write_record(out, rec);
  }
  if (!out) throw DataError("failed writing " + path);
}

void write_plot_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  csv::write_record(out, {"scenario", "method", "rate", "recon_score", "tpr", "dp_ratio"});

  // Series-major ordering: each (scenario, method) block is one line of a
  // rate-vs-metric plot.
  std::vector<const AggregateRow*> ordered;
  for (const auto& row : rows) ordered.push_back(&row);
  std::stable_sort(ordered.begin(), ordered.end(), [](const AggregateRow* a, const AggregateRow* b) {
    if (a->scenario != b->scenario) return a->scenario < b->scenario;
    if (a->method != b->method) return a->method < b->method;
    return a->rate < b->rate;
  });

  std::vector<std::string> rec;
  for (const AggregateRow* row : ordered) {
    rec.clear();
    rec.push_back(row->scenario);
    rec.push_back(row->method);
    rec.push_back(format_cell(row->rate));
    for (const char* col : {"recon_score", "tpr", "dp_ratio"}) {
      auto it = row->means.find(col);
      rec.push_back(it == row->means.end() ? "" : format_cell(it->second));
    }
    csv::write_record(out, rec);
  }
  if (!out) throw DataError("failed writing " + path);
}

std::vector<TrialRecord> run(const ExperimentConfig& config) {
  if (config.scenarios.empty()) throw ConfigError("config needs at least one scenario");
  if (config.methods.empty()) throw ConfigError("config needs at least one method");
  if (config.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (config.threshold_fraction <= 0.0 || config.threshold_fraction > 1.0)
    throw ConfigError("threshold_fraction must lie in (0, 1]");
  {
    std::set<std::string> seen;
    for (const auto& m : config.methods) {
      if (!kKnownMethods.count(m.name)) throw ConfigError("unknown method: " + m.name);
      if (!seen.insert(m.name).second) throw ConfigError("duplicate method: " + m.name);
    }
  }

  Dataset base;
  if (config.source.synthetic && config.source.csv_path)
    throw ConfigError("source must hold exactly one of synthetic or csv");
  if (config.source.synthetic)
    base = generate_synthetic(*config.source.synthetic);
  else if (config.source.csv_path)
    base = load_csv(*config.source.csv_path, config.source.schema);
  else
    throw ConfigError("config needs a dataset source");

  Dataset iid = make_iid(base, Rng::derive(config.base_seed, "bench.iid"));

  std::vector<std::string> ids = iid.group_ids();
  std::set<std::string> indicator_features;
  if (config.append_group_feature && ids.size() >= 2) {
    // One indicator per group minus a reference group; downstream models can
    // then condition on group membership the way the correction cannot.
    std::vector<std::string> names;
    for (size_t g = 0; g + 1 < ids.size(); ++g) names.push_back("group_is_" + ids[g]);
    bool all_present = true, any_present = false;
    for (const auto& name : names) {
      bool present = iid.feature_index(name) >= 0;
      all_present = all_present && present;
      any_present = any_present || present;
    }
    if (any_present && !all_present)
      throw ConfigError("dataset holds a partial set of group indicator columns");
    if (!any_present) {
      for (size_t g = 0; g + 1 < ids.size(); ++g) {
        std::vector<double> col(iid.n_rows());
        for (size_t r = 0; r < iid.n_rows(); ++r) col[r] = iid.group[r] == ids[g] ? 1.0 : 0.0;
        iid = with_feature_added(iid, names[g], col);
      }
    }
    indicator_features.insert(names.begin(), names.end());
  }

  for (const auto& sc : config.scenarios)
    if (std::find(ids.begin(), ids.end(), sc.noisy_group) == ids.end())
      throw ConfigError("scenario group '" + sc.noisy_group + "' not present in dataset");

  std::vector<TrialRecord> records;
  for (size_t s_idx = 0; s_idx < config.scenarios.size(); ++s_idx) {
    const Scenario& sc = config.scenarios[s_idx];
    for (size_t r_idx = 0; r_idx < sc.rates.size(); ++r_idx) {
      double rate = sc.rates[r_idx];
      for (int trial = 0; trial < config.n_trials; ++trial) {
        NoiseSpec noise;
        if (sc.target == NoiseTarget::label0 || sc.target == NoiseTarget::both)
          noise.rates[{sc.noisy_group, 0}] = rate;
        if (sc.target == NoiseTarget::label1 || sc.target == NoiseTarget::both)
          noise.rates[{sc.noisy_group, 1}] = rate;
        int noise_idx = config.resample_noise_per_trial ? trial : 0;
        // Keyed without the method so every method sees the same noise.
        noise.seed = Rng::derive(config.base_seed,
                                 "bench.noise." + coord_tag(s_idx, r_idx, noise_idx));
        Dataset noisy = inject_noise(iid, noise);
        std::vector<size_t> train_rows = noisy.rows_in_split(Split::train);

        for (const auto& m : config.methods) {
          TrialRecord rec;
          rec.method = m.name;
          rec.scenario = sc.tag();
          rec.rate = rate;
          rec.trial = trial;
          try {
            auto space = default_space(m.name);
            for (const auto& [name, range] : m.space) space[name] = range;
            rec.hyperparams =
                sample_hyperparameters(space, config.base_seed, m.name, trial);
            rec.downstream_hyperparams = sample_hyperparameters(
                downstream_space(), config.base_seed, m.name + "/downstream", trial);

            uint64_t method_seed = Rng::derive(
                config.base_seed, "bench.method." + m.name + "." + coord_tag(s_idx, r_idx, trial));
            AppliedMethod applied =
                apply_method(noisy, m.name, rec.hyperparams, method_seed, indicator_features);

            if (edits_labels(m.name) && applied.corrected) {
              std::vector<int> clean, corrected;
              std::vector<std::string> groups;
              for (size_t r : train_rows) {
                clean.push_back(noisy.clean_labels[r]);
                corrected.push_back((*applied.corrected)[r]);
                groups.push_back(noisy.group[r]);
              }
              rec.recon = reconstruction(clean, corrected, groups);
            }

            uint64_t downstream_seed = Rng::derive(
                config.base_seed,
                "bench.downstream." + m.name + "." + coord_tag(s_idx, r_idx, trial));
            EnsembleParams d_params =
                ensemble_from_hypers(rec.downstream_hyperparams, downstream_seed);
            FittedEnsemble model = fit(applied.dataset, d_params);

            std::vector<double> scores = predict_scores(model, applied.dataset, Split::test);
            ThresholdResult thr = top_fraction_threshold(scores, config.threshold_fraction);

            std::vector<size_t> eval_rows = applied.dataset.rows_in_split(Split::test);
            std::vector<int> actual;
            std::vector<std::string> eval_groups;
            for (size_t r : eval_rows) {
              actual.push_back(applied.dataset.labels[r]);
              eval_groups.push_back(applied.dataset.group[r]);
            }

            ModelMetrics mm;
            mm.tpr = tpr(thr.labels, actual);
            mm.dp_ratio = dp_ratio(thr.labels, eval_groups);
            mm.threshold = thr.threshold;
            mm.pred_prevalence = predicted_prevalence_by_group(thr.labels, eval_groups);
            rec.model = mm;
            rec.ok = true;
          } catch (const std::exception& e) {
            rec.ok = false;
            rec.fail_reason = e.what();
            rec.recon.reset();
            rec.model.reset();
          }
          records.push_back(std::move(rec));
        }
      }
    }
  }

  std::filesystem::create_directories(config.out_dir);
  std::vector<std::string> cols = metric_schema(ids);
  write_trials_csv(records, config.out_dir + "/trials.csv", cols);
  std::vector<AggregateRow> agg = aggregate(records);
  write_aggregate_csv(agg, config.out_dir + "/aggregate.csv", cols);
  write_plot_csv(agg, config.out_dir + "/plot_data.csv");
  return records;
}

void report_from_trials(const std::string& trials_csv, const std::string& out_dir) {
  TrialsFile file = load_trials_csv(trials_csv);
  std::filesystem::create_directories(out_dir);
  std::vector<AggregateRow> agg = aggregate(file.records);
  write_aggregate_csv(agg, out_dir + "/aggregate.csv", file.metric_cols);
  write_plot_csv(agg, out_dir + "/plot_data.csv");
}

}  // namespace fairobnc
