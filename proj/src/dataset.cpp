#include "fairobnc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "fairobnc/errors.hpp"
#include "fairobnc/rng.hpp"

namespace fairobnc {

namespace {

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_binary_label(const std::string& raw, const std::string& column, size_t data_row) {
  std::string v = trimmed(raw);
  if (v == "0") return 0;
  if (v == "1") return 1;
  throw DataError("column '" + column + "' must be 0 or 1, got '" + raw + "' at data row " +
                  std::to_string(data_row));
}

double parse_feature(const std::string& raw, const std::string& column, size_t data_row) {
  std::string v = trimmed(raw);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw DataError("column '" + column + "' is not numeric: '" + raw + "' at data row " +
                    std::to_string(data_row));
  if (!std::isfinite(out))
    throw DataError("column '" + column + "' has non-finite value at data row " +
                    std::to_string(data_row));
  return out;
}

void permute_in_place(std::vector<std::string>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

void permute_in_place(std::vector<Split>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> split_from_name(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  return std::nullopt;
}

std::vector<size_t> Dataset::rows_in_split(Split s) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) rows.push_back(i);
  return rows;
}

std::vector<std::string> Dataset::group_ids() const {
  std::set<std::string> ids(group.begin(), group.end());
  return {ids.begin(), ids.end()};
}

int Dataset::feature_index(std::string_view name) const {
  for (size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return static_cast<int>(i);
  return -1;
}

void Dataset::validate() const {
  const size_t n = labels.size();
  if (group.size() != n || split.size() != n)
    throw DataError("dataset columns have mismatched lengths");
  if (!clean_labels.empty() && clean_labels.size() != n)
    throw DataError("clean_labels length does not match dataset");
  if (features.size() != n * feature_names.size())
    throw DataError("feature matrix size does not match rows x feature names");
  {
    std::set<std::string> seen;
    for (const auto& name : feature_names)
      if (!seen.insert(name).second) throw DataError("duplicate feature name: " + name);
  }
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("label out of {0,1} at row " + std::to_string(i));
    if (!clean_labels.empty() && clean_labels[i] != 0 && clean_labels[i] != 1)
      throw DataError("clean label out of {0,1} at row " + std::to_string(i));
    if (group[i].empty()) throw DataError("empty group id at row " + std::to_string(i));
  }
  for (double v : features)
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  if (!csv::read_record(in, line)) throw DataError("empty file: " + path);
  std::vector<std::string> header = csv::split_record(line);

  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw DataError("duplicate column '" + h + "' in " + path);
  }

  auto find_col = [&](const std::string& name) -> int {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };

  int label_col = find_col(schema.label);
  int group_col = find_col(schema.group);
  int split_col = find_col(schema.split);
  int clean_col = find_col(schema.clean_label);
  if (label_col < 0) throw DataError("missing label column '" + schema.label + "' in " + path);
  if (group_col < 0) throw DataError("missing group column '" + schema.group + "' in " + path);

  Dataset ds;
  std::vector<int> feature_cols;
  for (size_t i = 0; i < header.size(); ++i) {
    int c = static_cast<int>(i);
    if (c == label_col || c == group_col || c == split_col || c == clean_col) continue;
    feature_cols.push_back(c);
    ds.feature_names.push_back(header[i]);
  }

  size_t data_row = 0;
  while (csv::read_record(in, line)) {
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
    ++data_row;
    std::vector<std::string> fields = csv::split_record(line);
    if (fields.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()) + " at data row " + std::to_string(data_row) +
                      " in " + path);
    ds.labels.push_back(parse_binary_label(fields[label_col], schema.label, data_row));
    const std::string& g = fields[group_col];
    if (g.empty()) throw DataError("empty group at data row " + std::to_string(data_row));
    ds.group.push_back(g);
    if (split_col >= 0) {
      std::string s = trimmed(fields[split_col]);
      auto sp = split_from_name(s);
      if (!sp)
        throw DataError("unknown split '" + fields[split_col] + "' at data row " +
                        std::to_string(data_row));
      ds.split.push_back(*sp);
    } else {
      ds.split.push_back(Split::train);
    }
    if (clean_col >= 0)
      ds.clean_labels.push_back(parse_binary_label(fields[clean_col], schema.clean_label, data_row));
    for (int c : feature_cols)
      ds.features.push_back(parse_feature(fields[c], header[c], data_row));
  }

  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  std::vector<std::string> rec = ds.feature_names;
  rec.push_back("label");
  rec.push_back("group");
  rec.push_back("split");
  if (ds.has_clean_labels()) rec.push_back("clean_label");
  csv::write_record(out, rec);

  for (size_t r = 0; r < ds.n_rows(); ++r) {
    rec.clear();
    for (size_t c = 0; c < ds.n_features(); ++c) rec.push_back(csv::format_double(ds.feature(r, c)));
    rec.push_back(ds.labels[r] ? "1" : "0");
    rec.push_back(ds.group[r]);
    rec.push_back(split_name(ds.split[r]));
    if (ds.has_clean_labels()) rec.push_back(ds.clean_labels[r] ? "1" : "0");
    csv::write_record(out, rec);
  }
  if (!out) throw DataError("failed writing " + path);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_rows == 0) throw ConfigError("n_rows must be positive");
  if (spec.n_features == 0) throw ConfigError("n_features must be positive");
  if (spec.group_fractions.empty()) throw ConfigError("group_fractions must be non-empty");
  double frac_sum = 0.0;
  for (const auto& [id, f] : spec.group_fractions) {
    if (id.empty()) throw ConfigError("empty group id in group_fractions");
    if (f <= 0.0) throw ConfigError("group fraction must be positive: " + id);
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-9) throw ConfigError("group fractions must sum to 1");
  if (spec.base_prevalence <= 0.0 || spec.base_prevalence >= 1.0)
    throw ConfigError("base_prevalence must lie in (0, 1)");
  if (spec.class_separation < 0.0) throw ConfigError("class_separation must be non-negative");

  const size_t n = spec.n_rows;
  const size_t d = spec.n_features;

  Dataset ds;
  ds.feature_names.reserve(d);
  for (size_t c = 0; c < d; ++c) ds.feature_names.push_back("f" + std::to_string(c));
  ds.features.resize(n * d);
  ds.labels.resize(n);
  ds.group.resize(n);
  ds.split.resize(n);

  Rng label_rng(spec.seed, "synthetic.labels");
  Rng group_rng(spec.seed, "synthetic.groups");

  // Per-coordinate shift so the distance between the class means is exactly
  // class_separation.
  const double shift = spec.class_separation / std::sqrt(static_cast<double>(d));

  for (size_t r = 0; r < n; ++r) {
    int y = label_rng.next_double() < spec.base_prevalence ? 1 : 0;
    ds.labels[r] = y;

    double u = group_rng.next_double();
    double acc = 0.0;
    std::string picked = spec.group_fractions.rbegin()->first;
    for (const auto& [id, f] : spec.group_fractions) {
      acc += f;
      if (u < acc) {
        picked = id;
        break;
      }
    }
    ds.group[r] = picked;

    Rng feat_rng(spec.seed, "synthetic.features", r);
    double* row = ds.features.data() + r * d;
    for (size_t c = 0; c < d; ++c) row[c] = feat_rng.next_normal() + (y ? shift : 0.0);
  }

  // Fixed 70/15/15 contiguous blocks; rows are IID so position carries no
  // information.
  const size_t n_train = 7 * n / 10;
  const size_t n_val = 3 * n / 20;
  for (size_t r = 0; r < n; ++r) {
    if (r < n_train)
      ds.split[r] = Split::train;
    else if (r < n_train + n_val)
      ds.split[r] = Split::validation;
    else
      ds.split[r] = Split::test;
  }

  ds.clean_labels = ds.labels;
  ds.validate();
  return ds;
}

Dataset make_iid(const Dataset& ds, uint64_t seed) {
  ds.validate();
  Dataset out = ds;
  Rng group_rng(seed, "make_iid.group");
  permute_in_place(out.group, group_rng);
  Rng split_rng(seed, "make_iid.split");
  permute_in_place(out.split, split_rng);
  return out;
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec) {
  ds.validate();
  auto ids = ds.group_ids();
  for (const auto& [key, rate] : spec.rates) {
    const auto& [g, cls] = key;
    if (cls != 0 && cls != 1) throw ConfigError("noise rate class must be 0 or 1");
    if (rate < 0.0 || rate > 1.0) throw ConfigError("noise rate must lie in [0, 1]");
    if (!std::binary_search(ids.begin(), ids.end(), g))
      throw ConfigError("noise rate references unknown group '" + g + "'");
  }

  Dataset out = ds;
  if (!out.has_clean_labels()) out.clean_labels = ds.labels;

  for (size_t r = 0; r < out.n_rows(); ++r) {
    if (out.split[r] != Split::train) continue;
    auto it = spec.rates.find({out.group[r], out.labels[r]});
    if (it == spec.rates.end() || it->second <= 0.0) continue;
    // One substream per row: rates elsewhere never shift this row's draw.
    Rng rng(spec.seed, "inject_noise", r);
    if (rng.next_double() < it->second) out.labels[r] = 1 - out.labels[r];
  }
  return out;
}

std::map<std::string, double> prevalence_by_group(const std::vector<int>& labels,
                                                  const std::vector<std::string>& group,
                                                  const std::vector<size_t>& rows) {
  if (labels.size() != group.size()) throw DataError("labels and group must align");
  std::map<std::string, std::pair<long long, long long>> counts;  // group -> (pos, total)
  for (size_t r : rows) {
    if (r >= labels.size()) throw DataError("row index out of range");
    auto& [pos, total] = counts[group[r]];
    pos += labels[r];
    total += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [id, c] : counts)
    out[id] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

Dataset with_feature_added(const Dataset& ds, const std::string& name,
                           const std::vector<double>& values) {
  if (name.empty()) throw ConfigError("feature name must be non-empty");
  if (ds.feature_index(name) >= 0) throw ConfigError("feature already present: " + name);
  if (values.size() != ds.n_rows()) throw DataError("feature column length does not match dataset");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("non-finite value in feature " + name);

  Dataset out = ds;
  const size_t d = ds.n_features();
  out.feature_names.push_back(name);
  out.features.resize(ds.n_rows() * (d + 1));
  for (size_t r = 0; r < ds.n_rows(); ++r) {
    double* dst = out.features.data() + r * (d + 1);
    const double* src = ds.features.data() + r * d;
    std::copy(src, src + d, dst);
    dst[d] = values[r];
  }
  return out;
}

Dataset with_features_removed(const Dataset& ds, const std::set<std::string>& names) {
  for (const auto& name : names)
    if (ds.feature_index(name) < 0) throw ConfigError("cannot remove unknown feature: " + name);
  if (names.empty()) return ds;

  Dataset out = ds;
  out.feature_names.clear();
  std::vector<size_t> kept;
  for (size_t c = 0; c < ds.n_features(); ++c) {
    if (names.count(ds.feature_names[c])) continue;
    kept.push_back(c);
    out.feature_names.push_back(ds.feature_names[c]);
  }
  out.features.resize(ds.n_rows() * kept.size());
  for (size_t r = 0; r < ds.n_rows(); ++r) {
    double* dst = out.features.data() + r * kept.size();
    for (size_t i = 0; i < kept.size(); ++i) dst[i] = ds.feature(r, kept[i]);
  }
  return out;
}

}  // namespace fairobnc
