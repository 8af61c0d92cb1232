#include "fairobnc/correction.hpp"

#include <algorithm>
#include <cmath>

#include "fairobnc/errors.hpp"
#include "json.hpp"

namespace fairobnc {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::flip_cap_reached: return "flip_cap_reached";
    case StopReason::margin_below_threshold: return "margin_below_threshold";
    case StopReason::ranking_exhausted: return "ranking_exhausted";
  }
  return "ranking_exhausted";
}

std::pair<double, double> prevalence_bounds(double pooled_prevalence, double disparity_target) {
  if (pooled_prevalence < 0.0 || pooled_prevalence > 1.0)
    throw ConfigError("pooled prevalence must lie in [0, 1]");
  if (disparity_target < 0.0 || disparity_target > 1.0)
    throw ConfigError("disparity target must lie in [0, 1]");
  double lo = pooled_prevalence * (1.0 - disparity_target);
  double hi = std::min(1.0, pooled_prevalence * (1.0 + disparity_target));
  return {lo, hi};
}

FlipBudget flip_budget(const std::vector<int>& labels, const std::vector<std::string>& group,
                       double disparity_target) {
  if (labels.empty()) throw DataError("flip_budget needs at least one row");
  if (labels.size() != group.size()) throw DataError("flip_budget inputs must align");

  long long pooled_pos = 0;
  std::map<std::string, std::pair<long long, long long>> counts;  // group -> (pos, total)
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
    pooled_pos += labels[i];
    auto& [pos, total] = counts[group[i]];
    pos += labels[i];
    total += 1;
  }

  double pooled = static_cast<double>(pooled_pos) / static_cast<double>(labels.size());
  auto [lo, hi] = prevalence_bounds(pooled, disparity_target);

  FlipBudget out;
  for (const auto& [id, c] : counts) {
    auto [pos, total] = c;
    double prev = static_cast<double>(pos) / static_cast<double>(total);
    long long budget = 0;
    if (prev < lo) {
      budget = std::llround(static_cast<double>(total) * (lo - prev));
      long long zeros = total - pos;
      if (budget > zeros) {
        budget = zeros;
        out.clamped.push_back(id);
      }
    } else if (prev > hi) {
      budget = std::llround(static_cast<double>(total) * (hi - prev));
      if (-budget > pos) {
        budget = -pos;
        out.clamped.push_back(id);
      }
    }
    out.per_group[id] = budget;
  }
  return out;
}

CorrectionResult fair_obnc_core(const MarginRanking& ranking, const std::vector<int>& labels,
                                const std::vector<std::string>& group,
                                const std::vector<size_t>& budget_rows, double max_flip_rate,
                                double disparity_target, double margin_threshold) {
  if (max_flip_rate < 0.0 || max_flip_rate > 1.0)
    throw ConfigError("max_flip_rate must lie in [0, 1]");
  if (margin_threshold < 0.0 || margin_threshold > 1.0)
    throw ConfigError("margin_threshold must lie in [0, 1]");
  if (labels.size() != group.size()) throw DataError("labels and group must align");
  if (budget_rows.empty()) throw DataError("no rows to correct over");
  if (ranking.indices.size() != ranking.margins.size())
    throw DataError("ranking indices and margins must align");

  std::vector<int> train_labels;
  std::vector<std::string> train_group;
  train_labels.reserve(budget_rows.size());
  train_group.reserve(budget_rows.size());
  for (size_t r : budget_rows) {
    if (r >= labels.size()) throw DataError("budget row out of range");
    train_labels.push_back(labels[r]);
    train_group.push_back(group[r]);
  }

  CorrectionResult res;
  res.labels = labels;
  res.report.method = "fair_obnc";
  res.report.initial_budget = flip_budget(train_labels, train_group, disparity_target);
  res.report.prevalence_before = prevalence_by_group(labels, group, budget_rows);

  FlipBudget budget = res.report.initial_budget;
  const size_t flip_cap = static_cast<size_t>(
      std::floor(max_flip_rate * static_cast<double>(budget_rows.size())));

  size_t flips = 0;
  size_t p = 0;
  StopReason reason;
  for (;;) {
    bool any_budget = false;
    for (const auto& [id, b] : budget.per_group)
      if (b != 0) any_budget = true;
    if (!any_budget) {
      reason = StopReason::budget_exhausted;
      break;
    }
    if (p == ranking.indices.size()) {
      reason = StopReason::ranking_exhausted;
      break;
    }
    if (ranking.margins[p] < margin_threshold) {
      reason = StopReason::margin_below_threshold;
      break;
    }
    if (flips == flip_cap) {
      reason = StopReason::flip_cap_reached;
      break;
    }

    size_t i = ranking.indices[p];
    if (i >= labels.size()) throw DataError("ranking index out of range");
    const std::string& s = group[i];
    auto it = budget.per_group.find(s);
    long long b = it == budget.per_group.end() ? 0 : it->second;
    int y = res.labels[i];
    if ((b > 0 && y == 0) || (b < 0 && y == 1)) {
      res.labels[i] = 1 - y;
      it->second += b > 0 ? -1 : 1;
      ++flips;
      res.report.flipped.push_back({i, y, 1 - y, ranking.margins[p], s});
    }
    ++p;
  }

  res.report.stop_reason = reason;
  res.report.flips_performed = flips;
  res.report.prevalence_after = prevalence_by_group(res.labels, group, budget_rows);
  return res;
}

CorrectionResult fair_obnc(const Dataset& ds, const FairObncParams& params) {
  ds.validate();
  EnsembleParams ens_params = params.ensemble;
  // The sensitive columns stay out of the noise model; the corrected labels
  // may still feed models that do see them.
  for (const auto& name : params.excluded_features)
    if (ds.feature_index(name) >= 0) ens_params.excluded_features.insert(name);

  FittedEnsemble ens = fit(ds, ens_params);
  MarginRanking ranking = rank_noisy(ens, ds, params.margin_mode);
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  return fair_obnc_core(ranking, ds.labels, ds.group, train_rows, params.max_flip_rate,
                        params.disparity_target, params.margin_threshold);
}

CorrectionResult obnc(const Dataset& ds, double k_fraction, const EnsembleParams& ensemble) {
  if (k_fraction < 0.0 || k_fraction > 1.0) throw ConfigError("k_fraction must lie in [0, 1]");
  ds.validate();

  FittedEnsemble ens = fit(ds, ensemble);
  MarginRanking ranking = rank_noisy(ens, ds, MarginMode::vote);
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);

  size_t cap = static_cast<size_t>(
      std::floor(k_fraction * static_cast<double>(train_rows.size())));
  size_t n_flips = std::min(cap, ranking.indices.size());

  CorrectionResult res;
  res.labels = ds.labels;
  res.report.method = "obnc";
  res.report.prevalence_before = prevalence_by_group(ds.labels, ds.group, train_rows);
  for (size_t p = 0; p < n_flips; ++p) {
    size_t i = ranking.indices[p];
    int y = res.labels[i];
    res.labels[i] = 1 - y;
    res.report.flipped.push_back({i, y, 1 - y, ranking.margins[p], ds.group[i]});
  }
  res.report.flips_performed = n_flips;
  res.report.stop_reason = n_flips < ranking.indices.size() ? StopReason::flip_cap_reached
                                                           : StopReason::ranking_exhausted;
  res.report.prevalence_after = prevalence_by_group(res.labels, ds.group, train_rows);
  return res;
}

std::string report_json(const CorrectionReport& report) {
  nlohmann::json doc;
  doc["method"] = report.method;
  doc["stop_reason"] = stop_reason_name(report.stop_reason);
  doc["flips_performed"] = report.flips_performed;

  nlohmann::json flips = nlohmann::json::array();
  for (const auto& f : report.flipped) {
    flips.push_back({{"index", f.index},
                     {"old_label", f.old_label},
                     {"new_label", f.new_label},
                     {"margin", f.margin},
                     {"group", f.group}});
  }
  doc["flipped"] = std::move(flips);

  doc["initial_budget"] = nlohmann::json::object();
  for (const auto& [id, b] : report.initial_budget.per_group) doc["initial_budget"][id] = b;
  doc["clamped_groups"] = report.initial_budget.clamped;
  doc["prevalence_before"] = report.prevalence_before;
  doc["prevalence_after"] = report.prevalence_after;
  return doc.dump(2);
}

}  // namespace fairobnc
