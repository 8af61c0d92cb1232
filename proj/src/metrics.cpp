#include "fairobnc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairobnc/errors.hpp"

namespace fairobnc {

ReconstructionMetrics reconstruction(const std::vector<int>& clean,
                                     const std::vector<int>& corrected,
                                     const std::vector<std::string>& group) {
  const size_t n = clean.size();
  if (n == 0) throw DataError("reconstruction needs at least one row");
  if (corrected.size() != n || group.size() != n)
    throw DataError("reconstruction inputs must align");

  struct Counts {
    long long tp = 0, tn = 0, fp = 0, fn = 0;
  };
  Counts all;
  std::map<std::string, Counts> per;
  for (size_t i = 0; i < n; ++i) {
    Counts& g = per[group[i]];
    if (clean[i] == 1) {
      if (corrected[i] == 1) {
        ++all.tp;
        ++g.tp;
      } else {
        ++all.fn;
        ++g.fn;
      }
    } else {
      if (corrected[i] == 1) {
        ++all.fp;
        ++g.fp;
      } else {
        ++all.tn;
        ++g.tn;
      }
    }
  }

  auto rates = [](const Counts& c) {
    GroupErrorRates r;
    if (c.fp + c.tn > 0) r.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    if (c.fn + c.tp > 0) r.fnr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
    return r;
  };

  ReconstructionMetrics m;
  m.tp = all.tp;
  m.tn = all.tn;
  m.fp = all.fp;
  m.fn = all.fn;
  m.score = static_cast<double>(all.tp + all.tn) / static_cast<double>(n);
  GroupErrorRates overall = rates(all);
  m.fpr = overall.fpr;
  m.fnr = overall.fnr;
  for (const auto& [id, c] : per) m.per_group[id] = rates(c);
  return m;
}

ThresholdResult top_fraction_threshold(const std::vector<double>& scores, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("fraction must lie in (0, 1]");
  const size_t m = scores.size();
  if (m == 0) throw DataError("top_fraction_threshold needs at least one score");

  // The epsilon guards against fraction * m landing a hair above an integer
  // (0.01 * 100 evaluates to just over 1 in binary floating point).
  double raw = std::ceil(fraction * static_cast<double>(m) - 1e-9);
  size_t k = static_cast<size_t>(std::max(1.0, std::min(raw, static_cast<double>(m))));

  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  ThresholdResult out;
  out.labels.assign(m, 0);
  for (size_t i = 0; i < k; ++i) out.labels[order[i]] = 1;
  out.threshold = scores[order[k - 1]];
  return out;
}

double tpr(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) throw DataError("tpr inputs must align");
  long long tp = 0, pos = 0;
  for (size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 1) {
      ++pos;
      if (predicted[i] == 1) ++tp;
    }
  }
  if (pos == 0) throw DataError("tpr undefined: no actual positives");
  return static_cast<double>(tp) / static_cast<double>(pos);
}

std::map<std::string, double> predicted_prevalence_by_group(const std::vector<int>& predicted,
                                                            const std::vector<std::string>& group) {
  if (predicted.size() != group.size()) throw DataError("inputs must align");
  if (predicted.empty()) throw DataError("needs at least one row");
  std::map<std::string, std::pair<long long, long long>> counts;
  for (size_t i = 0; i < predicted.size(); ++i) {
    auto& [pos, total] = counts[group[i]];
    pos += predicted[i];
    total += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [id, c] : counts)
    out[id] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

double dp_ratio(const std::vector<int>& predicted, const std::vector<std::string>& group) {
  auto prev = predicted_prevalence_by_group(predicted, group);
  double lo = 2.0, hi = -1.0;
  for (const auto& [id, p] : prev) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (hi == 0.0) return 1.0;  // nobody predicted positive anywhere: parity
  return lo / hi;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DataError("auc inputs must align");
  const size_t n = scores.size();
  if (n == 0) throw DataError("auc needs at least one row");

  long long n_pos = 0;
  for (int y : labels) n_pos += y;
  long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied scores, then the Mann-Whitney identity.
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("pearson inputs must align");
  const size_t n = x.size();
  if (n == 0) throw DataError("pearson needs at least one row");

  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace fairobnc
