#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fairobnc/dataset.hpp"

namespace fairobnc {

enum class MarginMode { vote, score };

const char* margin_mode_name(MarginMode m);

struct EnsembleParams {
  int n_learners = 51;
  int max_depth = 8;
  int min_leaf = 5;
  double bootstrap_fraction = 1.0;
  double feature_subsample = 1.0;
  std::set<std::string> excluded_features;
  uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // index into trained_feature_set; -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double gain = 0.0;   // impurity decrease, count-weighted
  double score = 0.5;  // leaf positive fraction, Laplace-smoothed
  int leaf_class = 1;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_score(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const;
};

struct FittedEnsemble {
  std::vector<DecisionTree> learners;
  std::vector<std::string> trained_feature_set;

  // x is laid out per trained_feature_set for all prediction entry points.
  double mean_score(std::span<const double> x) const;
  int votes_for(std::span<const double> x, int label) const;
  int predicted_class(std::span<const double> x, MarginMode mode) const;

  // Summed impurity decrease per trained feature, across all learners.
  std::vector<double> importance() const;
};

// Bagged decision-tree ensemble over the train split. Each learner draws its
// own bootstrap sample and feature subset from a substream keyed by the
// learner index, so a fitted prefix is unchanged by growing n_learners.
FittedEnsemble fit(const Dataset& ds, const EnsembleParams& params);

// Margin of the given label in [-1, 1]; positive means the ensemble agrees.
double vote_margin(const FittedEnsemble& ens, std::span<const double> x, int label);
double score_margin(const FittedEnsemble& ens, std::span<const double> x, int label);

// The bare formulas behind the two margins, for callers holding raw tallies.
double vote_margin_value(int votes_for_label, int total_votes);
double score_margin_value(double mean_score, int label);

struct MarginRanking {
  // Train rows whose predicted class disagrees with the observed label,
  // ordered by descending margin magnitude (ties by ascending row index).
  std::vector<size_t> indices;   // dataset row indices
  std::vector<double> margins;   // |margin|, aligned with indices
  MarginMode mode = MarginMode::vote;
};

MarginRanking rank_noisy(const FittedEnsemble& ens, const Dataset& ds, MarginMode mode);

// Mean ensemble scores for the rows of one split, in ascending row order.
std::vector<double> predict_scores(const FittedEnsemble& ens, const Dataset& ds, Split split);

// Versioned JSON serialization; loading a dump reproduces predictions
// bit-exactly.
std::string dump_model(const FittedEnsemble& ens);
FittedEnsemble load_model(const std::string& text);

}  // namespace fairobnc
