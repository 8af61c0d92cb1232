#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairobnc/dataset.hpp"
#include "fairobnc/ensemble.hpp"

namespace fairobnc {

struct FairObncParams {
  double max_flip_rate = 0.2;      // cap on flips as a fraction of train rows
  double disparity_target = 0.05;  // half-width of the tolerated prevalence band
  double margin_threshold = 0.0;   // stop once |margin| drops below this
  MarginMode margin_mode = MarginMode::vote;
  std::set<std::string> excluded_features;  // hidden from the noise ensemble only
  EnsembleParams ensemble;
};

// [low, high] prevalence band around the pooled prevalence; high is capped
// at 1.
std::pair<double, double> prevalence_bounds(double pooled_prevalence, double disparity_target);

struct FlipBudget {
  // Signed flips per group: positive flips 0->1, negative flips 1->0.
  std::map<std::string, long long> per_group;
  // Groups whose budget was cut to the number of available source labels.
  std::vector<std::string> clamped;
};

FlipBudget flip_budget(const std::vector<int>& labels, const std::vector<std::string>& group,
                       double disparity_target);

enum class StopReason {
  budget_exhausted,
  flip_cap_reached,
  margin_below_threshold,
  ranking_exhausted,
};

const char* stop_reason_name(StopReason r);

struct FlipRecord {
  size_t index = 0;  // dataset row
  int old_label = 0;
  int new_label = 0;
  double margin = 0.0;  // |margin| at flip time (ranker score for massaging)
  std::string group;
};

struct CorrectionReport {
  std::string method;
  std::vector<FlipRecord> flipped;
  StopReason stop_reason = StopReason::ranking_exhausted;
  size_t flips_performed = 0;
  FlipBudget initial_budget;
  std::map<std::string, double> prevalence_before;  // train split
  std::map<std::string, double> prevalence_after;
};

std::string report_json(const CorrectionReport& report);

struct CorrectionResult {
  std::vector<int> labels;  // full label column with corrections applied
  CorrectionReport report;
};

// Core budgeted-flipping pass over a precomputed ranking. Budgets, the
// prevalence band, and the flip cap are all computed over budget_rows.
CorrectionResult fair_obnc_core(const MarginRanking& ranking, const std::vector<int>& labels,
                                const std::vector<std::string>& group,
                                const std::vector<size_t>& budget_rows, double max_flip_rate,
                                double disparity_target, double margin_threshold);

// Fairness-aware ordered correction: fits the noise ensemble, ranks
// misclassified train rows by margin, then flips through fair_obnc_core.
CorrectionResult fair_obnc(const Dataset& ds, const FairObncParams& params);

// Unconstrained baseline: flips the top k_fraction of train rows in the
// vote-margin ranking to the ensemble's predicted class.
CorrectionResult obnc(const Dataset& ds, double k_fraction, const EnsembleParams& ensemble);

}  // namespace fairobnc
