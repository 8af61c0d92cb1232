#include "fairobnc/audit.hpp"

#include <numeric>
#include <set>

#include "fairobnc/errors.hpp"
#include "fairobnc/metrics.hpp"

namespace fairobnc {

namespace {

EnsembleParams default_probe() {
  EnsembleParams p;
  p.n_learners = 31;
  p.max_depth = 6;
  p.min_leaf = 20;
  p.seed = 0x5eed;
  return p;
}

// Held-out AUC for predicting the indicator from the features, alternating
// rows into probe-train and probe-test halves.
double probe_auc(const Dataset& ds, const std::vector<int>& indicator,
                 const EnsembleParams& params) {
  Dataset probe;
  probe.feature_names = ds.feature_names;
  probe.features = ds.features;
  probe.labels = indicator;
  probe.group = ds.group;
  probe.split.resize(ds.n_rows());
  std::vector<int> held_out;
  for (size_t r = 0; r < ds.n_rows(); ++r) {
    probe.split[r] = r % 2 == 0 ? Split::train : Split::test;
    if (r % 2 == 1) held_out.push_back(indicator[r]);
  }

  {
    long long pos = 0, n_train = 0;
    for (size_t r = 0; r < probe.n_rows(); r += 2) {
      pos += indicator[r];
      ++n_train;
    }
    if (pos == 0 || pos == n_train) return 0.5;  // nothing to learn from
  }

  FittedEnsemble model = fit(probe, params);
  return auc(predict_scores(model, probe, Split::test), held_out);
}

}  // namespace

IidAudit audit_iid(const Dataset& ds) { return audit_iid(ds, default_probe()); }

IidAudit audit_iid(const Dataset& ds, const EnsembleParams& probe) {
  ds.validate();
  if (ds.n_rows() < 2) throw DataError("audit_iid needs at least two rows");

  auto ids = ds.group_ids();
  bool multi_group = ids.size() >= 2;
  std::set<Split> splits(ds.split.begin(), ds.split.end());
  bool multi_split = splits.size() >= 2;
  if (!multi_group && !multi_split)
    throw DataError("audit_iid needs at least two groups or two splits");

  IidAudit out;
  if (multi_group) {
    std::vector<int> indicator(ds.n_rows());
    for (size_t r = 0; r < ds.n_rows(); ++r) indicator[r] = ds.group[r] == ids.front() ? 1 : 0;
    out.group_auc = probe_auc(ds, indicator, probe);
  }
  if (multi_split) {
    std::vector<int> indicator(ds.n_rows());
    for (size_t r = 0; r < ds.n_rows(); ++r)
      indicator[r] = ds.split[r] == Split::train ? 1 : 0;
    out.split_auc = probe_auc(ds, indicator, probe);
  }
  return out;
}

}  // namespace fairobnc
