#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fairobnc {

enum class Split : uint8_t { train = 0, validation = 1, test = 2 };

const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

// Tabular binary-classification dataset. `labels` holds the observed
// (possibly noisy) labels; `clean_labels`, when non-empty, preserves the
// pre-injection labels for evaluation only.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<double> features;  // row-major, n_rows() x n_features()
  std::vector<int> labels;       // values in {0,1}
  std::vector<std::string> group;
  std::vector<Split> split;
  std::vector<int> clean_labels;  // empty when not tracked

  size_t n_rows() const { return labels.size(); }
  size_t n_features() const { return feature_names.size(); }
  bool has_clean_labels() const { return !clean_labels.empty(); }

  double feature(size_t row, size_t col) const {
    return features[row * feature_names.size() + col];
  }
  std::span<const double> row(size_t r) const {
    return {features.data() + r * feature_names.size(), feature_names.size()};
  }

  std::vector<size_t> rows_in_split(Split s) const;
  std::vector<std::string> group_ids() const;  // sorted unique
  int feature_index(std::string_view name) const;  // -1 when absent

  void validate() const;  // throws DataError when an invariant is broken
};

struct CsvSchema {
  std::string label = "label";
  std::string group = "group";
  std::string split = "split";              // all rows train when absent
  std::string clean_label = "clean_label";  // untracked when absent
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Labels/group/split round-trip bit-exact; features are written with 17
// significant digits, which round-trips IEEE doubles exactly.
void save_csv(const Dataset& ds, const std::string& path);

struct SyntheticSpec {
  size_t n_rows = 0;
  size_t n_features = 0;
  std::map<std::string, double> group_fractions;  // sums to 1
  double base_prevalence = 0.1;
  double class_separation = 2.0;  // distance between per-class feature means
  uint64_t seed = 0;
};

// Two Gaussian feature clusters (one per class); group drawn independently
// of features and labels. Splits are assigned 70/15/15 train/validation/test.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Shuffles the group column and reassigns splits by permutation, removing
// any dependence between group/split and features or labels.
Dataset make_iid(const Dataset& ds, uint64_t seed);

struct NoiseSpec {
  // (group id, class) -> flip probability; unlisted cells default to 0.
  std::map<std::pair<std::string, int>, double> rates;
  uint64_t seed = 0;
};

// Flips train-split labels independently per the configured cell rates.
// Validation/test labels are never touched; clean_labels are snapshotted
// from the current labels when not already present.
Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec);

// Positive-label fraction per group over the given rows.
std::map<std::string, double> prevalence_by_group(const std::vector<int>& labels,
                                                  const std::vector<std::string>& group,
                                                  const std::vector<size_t>& rows);

Dataset with_feature_added(const Dataset& ds, const std::string& name,
                           const std::vector<double>& values);
Dataset with_features_removed(const Dataset& ds, const std::set<std::string>& names);

}  // namespace fairobnc
