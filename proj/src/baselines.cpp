#include "fairobnc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairobnc/audit.hpp"
#include "fairobnc/errors.hpp"
#include "fairobnc/metrics.hpp"
#include "fairobnc/rng.hpp"
#include "json.hpp"

namespace fairobnc {

namespace {

struct GroupCounts {
  long long pos = 0;
  long long total = 0;
  double prevalence() const { return static_cast<double>(pos) / static_cast<double>(total); }
};

std::map<std::string, GroupCounts> train_group_counts(const Dataset& ds,
                                                      const std::vector<size_t>& train_rows) {
  std::map<std::string, GroupCounts> counts;
  for (size_t r : train_rows) {
    auto& c = counts[ds.group[r]];
    c.pos += ds.labels[r];
    c.total += 1;
  }
  return counts;
}

Dataset keep_rows(const Dataset& ds, const std::vector<char>& keep) {
  Dataset out;
  out.feature_names = ds.feature_names;
  const size_t d = ds.n_features();
  for (size_t r = 0; r < ds.n_rows(); ++r) {
    if (!keep[r]) continue;
    const double* src = ds.features.data() + r * d;
    out.features.insert(out.features.end(), src, src + d);
    out.labels.push_back(ds.labels[r]);
    out.group.push_back(ds.group[r]);
    out.split.push_back(ds.split[r]);
    if (ds.has_clean_labels()) out.clean_labels.push_back(ds.clean_labels[r]);
  }
  return out;
}

void append_row_copy(Dataset& out, const Dataset& ds, size_t r) {
  const size_t d = ds.n_features();
  const double* src = ds.features.data() + r * d;
  out.features.insert(out.features.end(), src, src + d);
  out.labels.push_back(ds.labels[r]);
  out.group.push_back(ds.group[r]);
  out.split.push_back(ds.split[r]);
  if (ds.has_clean_labels()) out.clean_labels.push_back(ds.clean_labels[r]);
}

}  // namespace

CorrectionResult massaging(const Dataset& ds, const EnsembleParams& ranker) {
  ds.validate();
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("massaging needs train rows");
  auto counts = train_group_counts(ds, train_rows);
  if (counts.size() < 2) throw DataError("massaging needs at least two groups");

  // Lowest and highest prevalence groups; prevalence ties resolve to the
  // lexicographically first group so the pick is stable.
  std::string g_low, g_high;
  double p_low = 2.0, p_high = -1.0;
  for (const auto& [id, c] : counts) {
    double p = c.prevalence();
    if (p < p_low) {
      p_low = p;
      g_low = id;
    }
    if (p > p_high) {
      p_high = p;
      g_high = id;
    }
  }

  CorrectionResult res;
  res.labels = ds.labels;
  res.report.method = "massaging";
  res.report.stop_reason = StopReason::budget_exhausted;
  res.report.prevalence_before = prevalence_by_group(ds.labels, ds.group, train_rows);

  const GroupCounts& low = counts[g_low];
  const GroupCounts& high = counts[g_high];
  long long m_cap = std::min(low.total - low.pos, high.pos);
  double tol = 1.0 / static_cast<double>(std::min(low.total, high.total));

  // Smallest per-group flip count m with promotions and demotions balanced
  // and the prevalence gap within one flip's resolution.
  long long m = 0;
  if (g_low != g_high) {
    for (; m < m_cap; ++m) {
      double gap = static_cast<double>(high.pos - m) / static_cast<double>(high.total) -
                   static_cast<double>(low.pos + m) / static_cast<double>(low.total);
      if (std::abs(gap) <= tol) break;
    }
  }

  if (m > 0) {
    FittedEnsemble model = fit(ds, ranker);
    std::vector<int> cols;
    for (const auto& name : model.trained_feature_set)
      cols.push_back(ds.feature_index(name));

    auto score_of = [&](size_t r) {
      std::vector<double> x(cols.size());
      for (size_t i = 0; i < cols.size(); ++i)
        x[i] = ds.feature(r, static_cast<size_t>(cols[i]));
      return model.mean_score(x);
    };

    std::vector<std::pair<double, size_t>> promote, demote;  // (score, row)
    for (size_t r : train_rows) {
      if (ds.group[r] == g_low && ds.labels[r] == 0) promote.emplace_back(score_of(r), r);
      if (ds.group[r] == g_high && ds.labels[r] == 1) demote.emplace_back(score_of(r), r);
    }
    std::sort(promote.begin(), promote.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;  // most positive-looking first
      return a.second < b.second;
    });
    std::sort(demote.begin(), demote.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;  // least positive-looking first
      return a.second < b.second;
    });

    for (long long i = 0; i < m; ++i) {
      size_t r = promote[static_cast<size_t>(i)].second;
      res.labels[r] = 1;
      res.report.flipped.push_back({r, 0, 1, promote[static_cast<size_t>(i)].first, g_low});
    }
    for (long long i = 0; i < m; ++i) {
      size_t r = demote[static_cast<size_t>(i)].second;
      res.labels[r] = 0;
      res.report.flipped.push_back({r, 1, 0, demote[static_cast<size_t>(i)].first, g_high});
    }
  }

  res.report.flips_performed = res.report.flipped.size();
  res.report.prevalence_after = prevalence_by_group(res.labels, ds.group, train_rows);
  return res;
}

SamplingResult prevalence_sampling(const Dataset& ds, const PrevalenceSamplingParams& params) {
  ds.validate();
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("prevalence_sampling needs train rows");
  auto counts = train_group_counts(ds, train_rows);
  if (counts.size() < 2) throw DataError("prevalence_sampling needs at least two groups");

  SamplingResult res;
  res.report.method = "prevalence_sampling";

  if (params.strategy == SamplingStrategy::undersample) {
    res.report.strategy = "undersample";
    for (const auto& [id, c] : counts)
      if (c.pos == 0 || c.pos == c.total)
        throw DataError("undersample needs both classes in every group, missing in '" + id + "'");

    double target = 2.0;
    for (const auto& [id, c] : counts) target = std::min(target, c.prevalence());
    res.report.target_prevalence = target;

    std::vector<char> keep(ds.n_rows(), 1);
    for (const auto& [id, c] : counts) {
      double prev = c.prevalence();
      long long drop = 0;
      if (prev > target) {
        // Solve (pos - k) / (total - k) = target for k.
        double k = (static_cast<double>(c.pos) - target * static_cast<double>(c.total)) /
                   (1.0 - target);
        drop = std::clamp(std::llround(k), 0LL, c.pos);
      }
      if (drop > 0) {
        std::vector<size_t> positives;
        for (size_t r : train_rows)
          if (ds.group[r] == id && ds.labels[r] == 1) positives.push_back(r);
        Rng rng(params.seed, "prevalence_sampling.drop." + id);
        // Partial shuffle; the first `drop` entries leave the dataset.
        for (long long i = 0; i < drop; ++i) {
          size_t j = static_cast<size_t>(i) +
                     rng.next_below(positives.size() - static_cast<size_t>(i));
          std::swap(positives[static_cast<size_t>(i)], positives[j]);
        }
        for (long long i = 0; i < drop; ++i) keep[positives[static_cast<size_t>(i)]] = 0;
      }
      res.report.changes.push_back({id, drop, 0});
    }
    res.dataset = keep_rows(ds, keep);
    return res;
  }

  res.report.strategy = "oversample";
  long long pooled_pos = 0, pooled_total = 0;
  for (const auto& [id, c] : counts) {
    pooled_pos += c.pos;
    pooled_total += c.total;
  }
  double target = static_cast<double>(pooled_pos) / static_cast<double>(pooled_total);
  res.report.target_prevalence = target;
  res.dataset = ds;
  if (target == 0.0 || target == 1.0) {
    for (const auto& [id, c] : counts) res.report.changes.push_back({id, 0, 0});
    return res;  // all groups already share the degenerate prevalence
  }

  for (const auto& [id, c] : counts) {
    double prev = c.prevalence();
    long long add = 0;
    int dup_label;
    if (prev < target) {
      if (c.pos == 0)
        throw DataError("oversample cannot raise prevalence of group '" + id +
                        "': it has no positives");
      // Solve (pos + k) / (total + k) = target for k.
      double k = (target * static_cast<double>(c.total) - static_cast<double>(c.pos)) /
                 (1.0 - target);
      add = std::max(0LL, std::llround(k));
      dup_label = 1;
    } else if (prev > target) {
      if (c.pos == c.total)
        throw DataError("oversample cannot lower prevalence of group '" + id +
                        "': it has no negatives");
      // Solve pos / (total + k) = target for k.
      double k = static_cast<double>(c.pos) / target - static_cast<double>(c.total);
      add = std::max(0LL, std::llround(k));
      dup_label = 0;
    } else {
      res.report.changes.push_back({id, 0, 0});
      continue;
    }

    if (add > 0) {
      std::vector<size_t> pool;
      for (size_t r : train_rows)
        if (ds.group[r] == id && ds.labels[r] == dup_label) pool.push_back(r);
      Rng rng(params.seed, "prevalence_sampling.dup." + id);
      for (long long i = 0; i < add; ++i)
        append_row_copy(res.dataset, ds, pool[rng.next_below(pool.size())]);
    }
    res.report.changes.push_back({id, 0, add});
  }
  return res;
}

RepairResult data_repairer(const Dataset& ds, double repair_level) {
  if (repair_level < 0.0 || repair_level > 1.0)
    throw ConfigError("repair_level must lie in [0, 1]");
  ds.validate();

  RepairResult res;
  res.report.method = "data_repairer";
  res.report.repair_level = repair_level;
  res.report.n_features = ds.n_features();

  // The identity repair must be bit-exact, so skip the arithmetic entirely.
  if (repair_level == 0.0 || ds.group_ids().size() < 2) {
    res.dataset = ds;
    return res;
  }

  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("data_repairer needs train rows");

  auto ids = ds.group_ids();
  res.dataset = ds;

  // Midpoint plotting positions (i + 0.5) / m; tied values share the mean
  // position of their run.
  auto positions_of = [](const std::vector<double>& sorted_vals) {
    const size_t m = sorted_vals.size();
    std::map<double, double> pos_of_value;
    size_t i = 0;
    while (i < m) {
      size_t j = i;
      while (j + 1 < m && sorted_vals[j + 1] == sorted_vals[i]) ++j;
      double mean_pos =
          ((static_cast<double>(i) + 0.5) + (static_cast<double>(j) + 0.5)) / 2.0 /
          static_cast<double>(m);
      pos_of_value[sorted_vals[i]] = mean_pos;
      i = j + 1;
    }
    return pos_of_value;
  };

  // Inverse of the pooled empirical distribution: linear interpolation
  // between adjacent plotting positions, clamped at the extremes.
  auto pooled_quantile = [](const std::vector<double>& sorted_vals, double q) {
    const size_t m = sorted_vals.size();
    double h = q * static_cast<double>(m) - 0.5;
    if (h <= 0.0) return sorted_vals.front();
    if (h >= static_cast<double>(m - 1)) return sorted_vals.back();
    size_t idx = static_cast<size_t>(std::floor(h));
    double frac = h - static_cast<double>(idx);
    return sorted_vals[idx] + frac * (sorted_vals[idx + 1] - sorted_vals[idx]);
  };

  for (size_t c = 0; c < ds.n_features(); ++c) {
    std::vector<double> pooled;
    std::map<std::string, std::vector<double>> by_group;
    for (size_t r : train_rows) {
      double v = ds.feature(r, c);
      pooled.push_back(v);
      by_group[ds.group[r]].push_back(v);
    }
    std::sort(pooled.begin(), pooled.end());

    std::map<std::string, std::map<double, double>> group_positions;
    for (auto& [id, vals] : by_group) {
      std::sort(vals.begin(), vals.end());
      group_positions[id] = positions_of(vals);
    }

    for (size_t r = 0; r < ds.n_rows(); ++r) {
      const auto& positions = group_positions[ds.group[r]];
      if (positions.empty()) continue;  // group absent from train: leave as is
      double v = ds.feature(r, c);
      // Rank unseen values against the fitted group sample.
      auto it = positions.lower_bound(v);
      double q;
      if (it != positions.end() && it->first == v) {
        q = it->second;
      } else if (it == positions.begin()) {
        q = it->second;
      } else if (it == positions.end()) {
        q = std::prev(it)->second;
      } else {
        auto lo = std::prev(it);
        q = lo->second +
            (v - lo->first) / (it->first - lo->first) * (it->second - lo->second);
      }
      double repaired = pooled_quantile(pooled, q);
      res.dataset.features[r * ds.n_features() + c] =
          repair_level == 1.0 ? repaired
                              : (1.0 - repair_level) * v + repair_level * repaired;
    }
  }
  return res;
}

SuppressionResult suppress_correlation(const Dataset& ds, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw ConfigError("threshold must lie in [0, 1]");
  ds.validate();
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("suppress_correlation needs train rows");

  auto ids = ds.group_ids();
  SuppressionResult res;
  res.report.method = "suppress_correlation";

  std::set<std::string> to_remove;
  for (size_t c = 0; c < ds.n_features(); ++c) {
    std::vector<double> col;
    col.reserve(train_rows.size());
    for (size_t r : train_rows) col.push_back(ds.feature(r, c));

    double worst = 0.0;
    for (const auto& id : ids) {
      std::vector<double> indicator;
      indicator.reserve(train_rows.size());
      for (size_t r : train_rows) indicator.push_back(ds.group[r] == id ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(pearson(col, indicator)));
    }
    if (worst > threshold) {
      to_remove.insert(ds.feature_names[c]);
      res.report.removed.push_back({ds.feature_names[c], worst});
    }
  }

  if (to_remove.size() == ds.n_features() && ds.n_features() > 0)
    throw DataError("suppress_correlation would remove every feature");
  res.dataset = with_features_removed(ds, to_remove);
  return res;
}

SuppressionResult suppress_importance(const Dataset& ds, const SuppressImportanceParams& params) {
  if (params.stop_auc < 0.0 || params.stop_auc > 1.0)
    throw ConfigError("stop_auc must lie in [0, 1]");
  ds.validate();
  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("suppress_importance needs train rows");

  auto ids = ds.group_ids();
  if (ids.empty()) throw DataError("suppress_importance needs group ids");
  const std::string& probe_target = ids.front();

  SuppressionResult res;
  res.report.method = "suppress_importance";
  res.dataset = ds;

  for (;;) {
    if (res.dataset.n_features() == 0)
      throw DataError("suppress_importance removed every feature without reaching stop_auc");

    // Group-membership probe over the train rows, alternating them into an
    // internal train/test split.
    Dataset probe;
    probe.feature_names = res.dataset.feature_names;
    const size_t d = probe.feature_names.size();
    std::vector<int> held_out_labels;
    for (size_t i = 0; i < train_rows.size(); ++i) {
      size_t r = train_rows[i];
      const double* src = res.dataset.features.data() + r * d;
      probe.features.insert(probe.features.end(), src, src + d);
      int is_target = ds.group[r] == probe_target ? 1 : 0;
      probe.labels.push_back(is_target);
      probe.group.push_back(ds.group[r]);
      probe.split.push_back(i % 2 == 0 ? Split::train : Split::test);
      if (i % 2 == 1) held_out_labels.push_back(is_target);
    }

    FittedEnsemble model = fit(probe, params.probe);
    std::vector<double> scores = predict_scores(model, probe, Split::test);
    double probe_auc = auc(scores, held_out_labels);
    res.report.probe_aucs.push_back(probe_auc);
    if (probe_auc <= params.stop_auc) break;

    std::vector<double> imp = model.importance();
    size_t best = 0;
    for (size_t i = 1; i < imp.size(); ++i)
      if (imp[i] > imp[best]) best = i;  // ties keep the earliest feature
    const std::string& name = model.trained_feature_set[best];
    res.report.removed.push_back({name, imp[best]});
    res.dataset = with_features_removed(res.dataset, {name});
  }
  return res;
}

std::string report_json(const SamplingReport& report) {
  nlohmann::json doc;
  doc["method"] = report.method;
  doc["strategy"] = report.strategy;
  doc["target_prevalence"] = report.target_prevalence;
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : report.changes)
    changes.push_back({{"group", c.group}, {"removed", c.removed}, {"added", c.added}});
  doc["changes"] = std::move(changes);
  return doc.dump(2);
}

std::string report_json(const RepairReport& report) {
  nlohmann::json doc;
  doc["method"] = report.method;
  doc["repair_level"] = report.repair_level;
  doc["n_features"] = report.n_features;
  return doc.dump(2);
}

std::string report_json(const FeatureRemovalReport& report) {
  nlohmann::json doc;
  doc["method"] = report.method;
  nlohmann::json removed = nlohmann::json::array();
  for (const auto& r : report.removed)
    removed.push_back({{"name", r.name}, {"value", r.value}});
  doc["removed"] = std::move(removed);
  doc["probe_aucs"] = report.probe_aucs;
  return doc.dump(2);
}

}  // namespace fairobnc
