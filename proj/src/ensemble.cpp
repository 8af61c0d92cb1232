#include "fairobnc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fairobnc/errors.hpp"
#include "fairobnc/rng.hpp"
#include "json.hpp"

namespace fairobnc {

namespace {

// Column-major copy of the usable features over the train rows.
struct TrainView {
  size_t n = 0;
  size_t d = 0;
  std::vector<double> col;  // d * n
  std::vector<int> y;

  double value(size_t c, size_t r) const { return col[c * n + r]; }
};

// Count-weighted Gini impurity: n * (1 - p0^2 - p1^2).
double gini_total(double n, double pos) {
  double neg = n - pos;
  return n - (pos * pos + neg * neg) / n;
}

struct TreeBuilder {
  const TrainView& view;
  const std::vector<int>& feat_subset;  // ascending trained-feature indices
  int max_depth;
  int min_leaf;

  std::vector<TreeNode> nodes;
  std::vector<uint32_t> rows;  // bootstrap sample, partitioned in place
  std::vector<std::pair<double, int>> scratch;
  std::vector<uint32_t> buf_left, buf_right;

  int build(size_t lo, size_t hi, int depth) {
    const size_t size = hi - lo;
    long long pos = 0;
    for (size_t i = lo; i < hi; ++i) pos += view.y[rows[i]];

    auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.score = (static_cast<double>(pos) + 1.0) / (static_cast<double>(size) + 2.0);
      leaf.leaf_class = (2 * pos >= static_cast<long long>(size)) ? 1 : 0;
      int id = static_cast<int>(nodes.size());
      nodes.push_back(leaf);
      return id;
    };

    if (depth >= max_depth || size < 2 * static_cast<size_t>(min_leaf) || pos == 0 ||
        pos == static_cast<long long>(size))
      return make_leaf();

    const double parent_g = gini_total(static_cast<double>(size), static_cast<double>(pos));
    double best_gain = 1e-12;  // a split must strictly beat zero
    int best_feature = -1;
    double best_threshold = 0.0;

    // Features ascending, thresholds ascending within a feature; ties on
    // gain keep the first candidate, so the choice is deterministic.
    for (int f : feat_subset) {
      scratch.clear();
      for (size_t i = lo; i < hi; ++i)
        scratch.emplace_back(view.value(static_cast<size_t>(f), rows[i]), view.y[rows[i]]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) continue;

      long long left_pos = 0;
      for (size_t i = 0; i + 1 < size; ++i) {
        left_pos += scratch[i].second;
        if (scratch[i].first == scratch[i + 1].first) continue;
        size_t n_l = i + 1;
        size_t n_r = size - n_l;
        if (n_l < static_cast<size_t>(min_leaf)) continue;
        if (n_r < static_cast<size_t>(min_leaf)) break;
        double gain = parent_g -
                      gini_total(static_cast<double>(n_l), static_cast<double>(left_pos)) -
                      gini_total(static_cast<double>(n_r), static_cast<double>(pos - left_pos));
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          double v = scratch[i].first;
          double v_next = scratch[i + 1].first;
          double thr = v + (v_next - v) / 2.0;
          // Midpoints of adjacent representable values can round up to the
          // right value; pin the cut so "<= threshold" splits at i exactly.
          if (!(thr < v_next)) thr = v;
          best_threshold = thr;
        }
      }
    }

    if (best_feature < 0) return make_leaf();

    int id = static_cast<int>(nodes.size());
    {
      TreeNode node;
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.gain = best_gain;
      nodes.push_back(node);
    }

    // Order-preserving partition keeps growth independent of any library
    // partition scheme.
    buf_left.clear();
    buf_right.clear();
    for (size_t i = lo; i < hi; ++i) {
      if (view.value(static_cast<size_t>(best_feature), rows[i]) <= best_threshold)
        buf_left.push_back(rows[i]);
      else
        buf_right.push_back(rows[i]);
    }
    size_t mid = lo + buf_left.size();
    std::copy(buf_left.begin(), buf_left.end(), rows.begin() + static_cast<ptrdiff_t>(lo));
    std::copy(buf_right.begin(), buf_right.end(), rows.begin() + static_cast<ptrdiff_t>(mid));

    int l = build(lo, mid, depth + 1);
    int r = build(mid, hi, depth + 1);
    nodes[static_cast<size_t>(id)].left = l;
    nodes[static_cast<size_t>(id)].right = r;
    return id;
  }
};

void validate_params(const EnsembleParams& p) {
  if (p.n_learners < 1) throw ConfigError("n_learners must be >= 1");
  if (p.max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (p.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (p.bootstrap_fraction <= 0.0 || p.bootstrap_fraction > 1.0)
    throw ConfigError("bootstrap_fraction must lie in (0, 1]");
  if (p.feature_subsample <= 0.0 || p.feature_subsample > 1.0)
    throw ConfigError("feature_subsample must lie in (0, 1]");
}

std::vector<double> gather_row(const Dataset& ds, const std::vector<int>& cols, size_t r) {
  std::vector<double> x(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) x[i] = ds.feature(r, static_cast<size_t>(cols[i]));
  return x;
}

std::vector<int> column_map(const FittedEnsemble& ens, const Dataset& ds) {
  std::vector<int> cols;
  cols.reserve(ens.trained_feature_set.size());
  for (const auto& name : ens.trained_feature_set) {
    int c = ds.feature_index(name);
    if (c < 0) throw DataError("dataset lacks trained feature: " + name);
    cols.push_back(c);
  }
  return cols;
}

}  // namespace

const char* margin_mode_name(MarginMode m) {
  return m == MarginMode::vote ? "vote" : "score";
}

double DecisionTree::predict_score(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf())
    node = &nodes[static_cast<size_t>(x[static_cast<size_t>(node->feature)] <= node->threshold
                                          ? node->left
                                          : node->right)];
  return node->score;
}

int DecisionTree::predict_class(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf())
    node = &nodes[static_cast<size_t>(x[static_cast<size_t>(node->feature)] <= node->threshold
                                          ? node->left
                                          : node->right)];
  return node->leaf_class;
}

double FittedEnsemble::mean_score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : learners) sum += tree.predict_score(x);
  return sum / static_cast<double>(learners.size());
}

int FittedEnsemble::votes_for(std::span<const double> x, int label) const {
  int v = 0;
  for (const auto& tree : learners)
    if (tree.predict_class(x) == label) ++v;
  return v;
}

int FittedEnsemble::predicted_class(std::span<const double> x, MarginMode mode) const {
  if (mode == MarginMode::vote) {
    // A split vote goes to the positive class.
    return 2 * votes_for(x, 1) >= static_cast<int>(learners.size()) ? 1 : 0;
  }
  return mean_score(x) >= 0.5 ? 1 : 0;
}

std::vector<double> FittedEnsemble::importance() const {
  std::vector<double> imp(trained_feature_set.size(), 0.0);
  for (const auto& tree : learners)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) imp[static_cast<size_t>(node.feature)] += node.gain;
  return imp;
}

FittedEnsemble fit(const Dataset& ds, const EnsembleParams& params) {
  validate_params(params);
  ds.validate();

  FittedEnsemble ens;
  std::vector<int> cols;
  for (size_t c = 0; c < ds.n_features(); ++c) {
    if (params.excluded_features.count(ds.feature_names[c])) continue;
    ens.trained_feature_set.push_back(ds.feature_names[c]);
    cols.push_back(static_cast<int>(c));
  }
  if (ens.trained_feature_set.empty()) throw DataError("no usable features to fit on");

  std::vector<size_t> train_rows = ds.rows_in_split(Split::train);
  if (train_rows.empty()) throw DataError("no train rows to fit on");

  TrainView view;
  view.n = train_rows.size();
  view.d = cols.size();
  view.col.resize(view.n * view.d);
  view.y.resize(view.n);
  for (size_t i = 0; i < view.n; ++i) view.y[i] = ds.labels[train_rows[i]];
  for (size_t c = 0; c < view.d; ++c)
    for (size_t i = 0; i < view.n; ++i)
      view.col[c * view.n + i] = ds.feature(train_rows[i], static_cast<size_t>(cols[c]));

  {
    long long pos = std::accumulate(view.y.begin(), view.y.end(), 0LL);
    if (pos == 0 || pos == static_cast<long long>(view.n))
      throw DataError("train split holds a single class");
  }

  size_t boot_n = static_cast<size_t>(std::max(
      1LL, std::llround(params.bootstrap_fraction * static_cast<double>(view.n))));
  double raw_k = std::ceil(params.feature_subsample * static_cast<double>(view.d) - 1e-9);
  size_t subset_k = static_cast<size_t>(
      std::max(1.0, std::min(raw_k, static_cast<double>(view.d))));

  ens.learners.resize(static_cast<size_t>(params.n_learners));
  std::vector<int> all_features(view.d);
  std::iota(all_features.begin(), all_features.end(), 0);

  for (int l = 0; l < params.n_learners; ++l) {
    // One substream per learner: the first k learners are identical no
    // matter how many follow. Bootstrap rows are drawn before the feature
    // subset; both orders are frozen by the determinism tests.
    Rng rng(params.seed, "fit.learner", static_cast<uint64_t>(l));

    std::vector<uint32_t> boot(boot_n);
    for (size_t i = 0; i < boot_n; ++i)
      boot[i] = static_cast<uint32_t>(rng.next_below(view.n));

    std::vector<int> subset_storage;
    const std::vector<int>* subset = &all_features;
    if (subset_k < view.d) {
      std::vector<int> pool = all_features;
      for (size_t i = 0; i < subset_k; ++i) {
        size_t j = i + rng.next_below(pool.size() - i);
        std::swap(pool[i], pool[j]);
      }
      subset_storage.assign(pool.begin(), pool.begin() + static_cast<ptrdiff_t>(subset_k));
      std::sort(subset_storage.begin(), subset_storage.end());
      subset = &subset_storage;
    }

    TreeBuilder builder{view,           *subset,         params.max_depth, params.min_leaf,
                        {},             std::move(boot), {},               {},
                        {}};
    builder.build(0, boot_n, 0);
    ens.learners[static_cast<size_t>(l)].nodes = std::move(builder.nodes);
  }

  return ens;
}

double vote_margin_value(int votes_for_label, int total_votes) {
  if (total_votes <= 0) throw ConfigError("total_votes must be positive");
  if (votes_for_label < 0 || votes_for_label > total_votes)
    throw ConfigError("votes_for_label out of range");
  return static_cast<double>(2 * votes_for_label - total_votes) / static_cast<double>(total_votes);
}

double score_margin_value(double mean_score, int label) {
  if (label != 0 && label != 1) throw ConfigError("label must be 0 or 1");
  return -std::abs(static_cast<double>(label) - mean_score);
}

double vote_margin(const FittedEnsemble& ens, std::span<const double> x, int label) {
  if (label != 0 && label != 1) throw ConfigError("label must be 0 or 1");
  return vote_margin_value(ens.votes_for(x, label), static_cast<int>(ens.learners.size()));
}

double score_margin(const FittedEnsemble& ens, std::span<const double> x, int label) {
  return score_margin_value(ens.mean_score(x), label);
}

MarginRanking rank_noisy(const FittedEnsemble& ens, const Dataset& ds, MarginMode mode) {
  std::vector<int> cols = column_map(ens, ds);
  MarginRanking out;
  out.mode = mode;

  std::vector<std::pair<double, size_t>> entries;  // (|margin|, row)
  for (size_t r : ds.rows_in_split(Split::train)) {
    std::vector<double> x = gather_row(ds, cols, r);
    int predicted = ens.predicted_class(x, mode);
    if (predicted == ds.labels[r]) continue;
    double m = mode == MarginMode::vote ? vote_margin(ens, x, ds.labels[r])
                                        : score_margin(ens, x, ds.labels[r]);
    entries.emplace_back(std::abs(m), r);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& [m, r] : entries) {
    out.indices.push_back(r);
    out.margins.push_back(m);
  }
  return out;
}

std::vector<double> predict_scores(const FittedEnsemble& ens, const Dataset& ds, Split split) {
  std::vector<int> cols = column_map(ens, ds);
  std::vector<size_t> rows = ds.rows_in_split(split);
  if (rows.empty())
    throw DataError(std::string("no rows in split '") + split_name(split) + "'");
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (size_t r : rows) scores.push_back(ens.mean_score(gather_row(ds, cols, r)));
  return scores;
}

namespace {
constexpr const char* kModelFormat = "fairobnc-ensemble-v1";
}

std::string dump_model(const FittedEnsemble& ens) {
  nlohmann::json doc;
  doc["format"] = kModelFormat;
  doc["features"] = ens.trained_feature_set;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : ens.learners) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      nlohmann::json j;
      if (node.is_leaf()) {
        j["s"] = node.score;
        j["c"] = node.leaf_class;
      } else {
        j["f"] = node.feature;
        j["t"] = node.threshold;
        j["l"] = node.left;
        j["r"] = node.right;
        j["g"] = node.gain;
      }
      nodes.push_back(std::move(j));
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

FittedEnsemble load_model(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model parse failed: ") + e.what());
  }

  try {
    if (!doc.is_object() || doc.value("format", "") != kModelFormat)
      throw DataError("unrecognized model format");

    FittedEnsemble ens;
    ens.trained_feature_set = doc.at("features").get<std::vector<std::string>>();
    const int d = static_cast<int>(ens.trained_feature_set.size());
    for (const auto& jtree : doc.at("trees")) {
      DecisionTree tree;
      for (const auto& j : jtree) {
        TreeNode node;
        if (j.contains("f")) {
          node.feature = j.at("f").get<int>();
          node.threshold = j.at("t").get<double>();
          node.left = j.at("l").get<int>();
          node.right = j.at("r").get<int>();
          node.gain = j.at("g").get<double>();
          if (node.feature < 0 || node.feature >= d) throw DataError("model feature out of range");
        } else {
          node.score = j.at("s").get<double>();
          node.leaf_class = j.at("c").get<int>();
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw DataError("model tree has no nodes");
      for (const auto& node : tree.nodes) {
        if (node.is_leaf()) continue;
        int n = static_cast<int>(tree.nodes.size());
        if (node.left < 0 || node.left >= n || node.right < 0 || node.right >= n)
          throw DataError("model child index out of range");
      }
      ens.learners.push_back(std::move(tree));
    }
    if (ens.learners.empty()) throw DataError("model has no learners");
    return ens;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model fields invalid: ") + e.what());
  }
}

}  // namespace fairobnc
