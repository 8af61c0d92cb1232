#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairobnc {

struct GroupErrorRates {
  std::optional<double> fpr;  // absent when the group has no clean negatives
  std::optional<double> fnr;  // absent when the group has no clean positives
};

// Agreement between corrected and clean labels. "False positive" here means
// a corrected label of 1 where the clean label is 0.
struct ReconstructionMetrics {
  double score = 0.0;  // fraction of rows where corrected == clean
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::map<std::string, GroupErrorRates> per_group;
};

ReconstructionMetrics reconstruction(const std::vector<int>& clean,
                                     const std::vector<int>& corrected,
                                     const std::vector<std::string>& group);

struct ThresholdResult {
  double threshold = 0.0;  // score of the last instance classified positive
  std::vector<int> labels;
};

// Classifies exactly ceil(fraction * n) top-scored instances as positive
// (ties broken by ascending index), matching a fixed-size selection budget.
ThresholdResult top_fraction_threshold(const std::vector<double>& scores, double fraction);

double tpr(const std::vector<int>& predicted, const std::vector<int>& actual);

// min/max ratio of predicted positive rates across groups; 1.0 is parity.
// All-zero predictions count as (vacuous) parity.
double dp_ratio(const std::vector<int>& predicted, const std::vector<std::string>& group);

std::map<std::string, double> predicted_prevalence_by_group(const std::vector<int>& predicted,
                                                            const std::vector<std::string>& group);

// Mann-Whitney AUC with average ranks over tied scores; degenerate
// single-class inputs score 0.5.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Pearson correlation; 0.0 when either side has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Downstream model quality on a held-out split.
struct ModelMetrics {
  double tpr = 0.0;
  double dp_ratio = 0.0;
  double threshold = 0.0;
  std::map<std::string, double> pred_prevalence;
};

}  // namespace fairobnc
