#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairobnc/correction.hpp"
#include "fairobnc/dataset.hpp"
#include "fairobnc/ensemble.hpp"

namespace fairobnc {

// Promotes top-ranked negatives in the lowest-prevalence group and demotes
// bottom-ranked positives in the highest-prevalence group, one for one,
// until train prevalences match up to the resolution one flip can achieve.
CorrectionResult massaging(const Dataset& ds, const EnsembleParams& ranker);

enum class SamplingStrategy { undersample, oversample };

struct PrevalenceSamplingParams {
  SamplingStrategy strategy = SamplingStrategy::undersample;
  uint64_t seed = 0;
};

struct SamplingChange {
  std::string group;
  long long removed = 0;
  long long added = 0;
};

struct SamplingReport {
  std::string method;
  std::string strategy;
  double target_prevalence = 0.0;
  std::vector<SamplingChange> changes;
};

std::string report_json(const SamplingReport& report);

struct SamplingResult {
  Dataset dataset;
  SamplingReport report;
};

// Equalizes train prevalences across groups by dropping positives
// (undersample, target = minimum group prevalence) or duplicating rows
// (oversample, target = pooled prevalence). Duplicates append at the end.
SamplingResult prevalence_sampling(const Dataset& ds, const PrevalenceSamplingParams& params);

struct RepairReport {
  std::string method;
  double repair_level = 0.0;
  size_t n_features = 0;
};

std::string report_json(const RepairReport& report);

struct RepairResult {
  Dataset dataset;
  RepairReport report;
};

// Maps each feature's per-group distribution toward the pooled distribution
// via quantile alignment; repair_level 0 is the identity, 1 is a full repair.
// Quantile maps are fitted on the train split and applied to all rows.
RepairResult data_repairer(const Dataset& ds, double repair_level);

struct RemovedFeature {
  std::string name;
  double value = 0.0;  // |correlation| or probe importance that triggered removal
};

struct FeatureRemovalReport {
  std::string method;
  std::vector<RemovedFeature> removed;
  std::vector<double> probe_aucs;  // importance variant: AUC before each removal, then final
};

std::string report_json(const FeatureRemovalReport& report);

struct SuppressionResult {
  Dataset dataset;
  FeatureRemovalReport report;
};

// Removes features whose train-split Pearson correlation with any
// group-membership indicator strictly exceeds the threshold in magnitude.
SuppressionResult suppress_correlation(const Dataset& ds, double threshold);

struct SuppressImportanceParams {
  double stop_auc = 0.6;
  EnsembleParams probe;
};

// Repeatedly fits a group-membership probe and removes its most important
// feature until the probe's held-out AUC drops to stop_auc or below.
SuppressionResult suppress_importance(const Dataset& ds, const SuppressImportanceParams& params);

}  // namespace fairobnc
