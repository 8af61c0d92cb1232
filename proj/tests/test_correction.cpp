#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fairobnc/correction.hpp"
#include "fairobnc/dataset.hpp"
#include "fairobnc/errors.hpp"
#include "fairobnc/metrics.hpp"
#include "json.hpp"

using namespace fairobnc;

namespace {

// Ten train rows, prevalences A=0.8 and B=0.2 around a pooled 0.5, used by
// the hand-traced core tests below.
struct CoreFixture {
  std::vector<int> labels = {1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
  std::vector<std::string> group = {"A", "A", "A", "A", "A", "B", "B", "B", "B", "B"};
  std::vector<size_t> rows = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  MarginRanking ranking(std::vector<size_t> idx, std::vector<double> margins) const {
    MarginRanking r;
    r.indices = std::move(idx);
    r.margins = std::move(margins);
    r.mode = MarginMode::vote;
    return r;
  }
};

}  // namespace

TEST_CASE("prevalence_bounds brackets the pooled rate") {
  auto [lo, hi] = prevalence_bounds(0.1, 0.2);
  CHECK(lo == doctest::Approx(0.08));
  CHECK(hi == doctest::Approx(0.12));

  auto [lo2, hi2] = prevalence_bounds(0.9, 0.2);
  CHECK(lo2 == doctest::Approx(0.72));
  CHECK(hi2 == 1.0);  // upper bound saturates

  auto [lo3, hi3] = prevalence_bounds(0.3, 0.0);
  CHECK(lo3 == 0.3);
  CHECK(hi3 == 0.3);

  CHECK_THROWS_AS(prevalence_bounds(-0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(prevalence_bounds(0.5, 1.5), ConfigError);
}

TEST_CASE("flip_budget matches hand arithmetic on a 200-row example") {
  // A: 100 rows with 15 positives, B: 100 rows with 5. Pooled 0.1, D = 0.2
  // puts the band at [0.08, 0.12]: A owes 3 demotions, B is owed 3
  // promotions.
  std::vector<int> labels;
  std::vector<std::string> group;
  for (int i = 0; i < 100; ++i) {
    labels.push_back(i < 15 ? 1 : 0);
    group.push_back("A");
  }
  for (int i = 0; i < 100; ++i) {
    labels.push_back(i < 5 ? 1 : 0);
    group.push_back("B");
  }

  FlipBudget b = flip_budget(labels, group, 0.2);
  CHECK(b.per_group.at("A") == -3);
  CHECK(b.per_group.at("B") == 3);
  CHECK(b.clamped.empty());
}

TEST_CASE("flip_budget leaves in-band groups untouched") {
  std::vector<int> labels;
  std::vector<std::string> group;
  for (int i = 0; i < 50; ++i) {
    labels.push_back(i < 5 ? 1 : 0);
    group.push_back("A");
  }
  for (int i = 0; i < 50; ++i) {
    labels.push_back(i < 5 ? 1 : 0);
    group.push_back("B");
  }
  FlipBudget b = flip_budget(labels, group, 0.1);
  CHECK(b.per_group.at("A") == 0);
  CHECK(b.per_group.at("B") == 0);
}

TEST_CASE("flip_budget rounds half away from zero") {
  // A has 10 rows, no positives; the pooled rate is 10/40 = 0.25 with a
  // zero-width band, so A's raw budget is 10 * 0.25 = 2.5 exactly.
  std::vector<int> labels;
  std::vector<std::string> group;
  for (int i = 0; i < 10; ++i) {
    labels.push_back(0);
    group.push_back("A");
  }
  for (int i = 0; i < 30; ++i) {
    labels.push_back(i < 10 ? 1 : 0);
    group.push_back("Z");
  }
  FlipBudget b = flip_budget(labels, group, 0.0);
  CHECK(b.per_group.at("A") == 3);
  // Z's raw budget is -2.5 up to floating-point wobble; allow either side.
  CHECK(b.per_group.at("Z") <= -2);
  CHECK(b.per_group.at("Z") >= -3);
}

TEST_CASE("flip_budget validates inputs") {
  CHECK_THROWS_AS(flip_budget({}, {}, 0.1), DataError);
  CHECK_THROWS_AS(flip_budget({1}, {"A", "B"}, 0.1), DataError);
  CHECK_THROWS_AS(flip_budget({2}, {"A"}, 0.1), DataError);
  CHECK_THROWS_AS(flip_budget({1}, {"A"}, -0.1), ConfigError);
}

TEST_CASE("core trace: both budgets spent then budget_exhausted") {
  CoreFixture fx;
  // Band [0.4, 0.6] gives F_A = -1, F_B = +1.
  auto ranking = fx.ranking({0, 5, 9, 1}, {0.9, 0.8, 0.7, 0.6});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.3, 0.2, 0.0);

  CHECK(res.report.initial_budget.per_group.at("A") == -1);
  CHECK(res.report.initial_budget.per_group.at("B") == 1);

  std::vector<int> expected = fx.labels;
  expected[0] = 0;
  expected[5] = 1;
  CHECK(res.labels == expected);
  CHECK(res.report.flips_performed == 2);
  CHECK(res.report.stop_reason == StopReason::budget_exhausted);

  REQUIRE(res.report.flipped.size() == 2);
  CHECK(res.report.flipped[0].index == 0);
  CHECK(res.report.flipped[0].old_label == 1);
  CHECK(res.report.flipped[0].new_label == 0);
  CHECK(res.report.flipped[0].margin == 0.9);
  CHECK(res.report.flipped[0].group == "A");
  CHECK(res.report.flipped[1].index == 5);

  CHECK(res.report.prevalence_before.at("A") == 0.8);
  CHECK(res.report.prevalence_after.at("A") == doctest::Approx(0.6));
  CHECK(res.report.prevalence_after.at("B") == doctest::Approx(0.4));
}

TEST_CASE("core trace: margin threshold stops the pass") {
  CoreFixture fx;
  auto ranking = fx.ranking({0, 5, 9, 1}, {0.9, 0.8, 0.7, 0.6});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.3, 0.2, 0.85);
  CHECK(res.report.flips_performed == 1);
  CHECK(res.report.stop_reason == StopReason::margin_below_threshold);
  CHECK(res.labels[0] == 0);
  CHECK(res.labels[5] == 0);  // never reached
}

TEST_CASE("core trace: flip cap stops the pass") {
  CoreFixture fx;
  auto ranking = fx.ranking({0, 5, 9, 1}, {0.9, 0.8, 0.7, 0.6});
  // R = 0.1 over 10 budget rows caps the pass at one flip.
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.1, 0.2, 0.0);
  CHECK(res.report.flips_performed == 1);
  CHECK(res.report.stop_reason == StopReason::flip_cap_reached);
}

TEST_CASE("core trace: zero flip rate hits the cap before any flip") {
  CoreFixture fx;
  auto ranking = fx.ranking({0, 5}, {0.9, 0.8});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.0, 0.2, 0.0);
  CHECK(res.report.flips_performed == 0);
  CHECK(res.report.stop_reason == StopReason::flip_cap_reached);
  CHECK(res.labels == fx.labels);
}

TEST_CASE("core trace: ranking exhausted with budget left over") {
  CoreFixture fx;
  auto ranking = fx.ranking({0}, {0.9});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.5, 0.2, 0.0);
  CHECK(res.report.flips_performed == 1);
  CHECK(res.report.stop_reason == StopReason::ranking_exhausted);
}

TEST_CASE("core trace: wrong-direction rows are skipped without cost") {
  CoreFixture fx;
  // Row 9 is a positive in B, but B's budget is positive (wants 0 -> 1).
  auto ranking = fx.ranking({9, 5}, {0.9, 0.8});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.5, 0.2, 0.0);
  CHECK(res.labels[9] == 1);  // untouched
  CHECK(res.labels[5] == 1);  // flipped
  CHECK(res.report.flips_performed == 1);
  CHECK(res.report.stop_reason == StopReason::ranking_exhausted);
}

TEST_CASE("core trace: in-band groups exhaust the budget immediately") {
  std::vector<int> labels = {1, 0, 1, 0};
  std::vector<std::string> group = {"A", "A", "B", "B"};
  MarginRanking ranking;
  ranking.indices = {0, 1};
  ranking.margins = {0.9, 0.8};
  CorrectionResult res = fair_obnc_core(ranking, labels, group, {0, 1, 2, 3}, 0.5, 0.2, 0.0);
  CHECK(res.report.flips_performed == 0);
  CHECK(res.report.stop_reason == StopReason::budget_exhausted);
  CHECK(res.labels == labels);
}

TEST_CASE("core ignores ranking rows outside the budget rows") {
  CoreFixture fx;
  std::vector<int> labels = fx.labels;
  std::vector<std::string> group = fx.group;
  labels.push_back(0);   // row 10, some other split
  group.push_back("C");  // group with no budget entry
  auto ranking = fx.ranking({10, 5}, {0.95, 0.8});
  CorrectionResult res = fair_obnc_core(ranking, labels, group, fx.rows, 0.5, 0.2, 0.0);
  CHECK(res.labels[10] == 0);
  CHECK(res.labels[5] == 1);
  CHECK(res.report.flips_performed == 1);
}

TEST_CASE("core validates arguments") {
  CoreFixture fx;
  auto ranking = fx.ranking({0}, {0.9});
  CHECK_THROWS_AS(fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 1.5, 0.2, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.2, 0.2, -0.1),
                  ConfigError);
  CHECK_THROWS_AS(fair_obnc_core(ranking, fx.labels, fx.group, {}, 0.2, 0.2, 0.0), DataError);
  auto bad = fx.ranking({0}, {0.9, 0.8});
  CHECK_THROWS_AS(fair_obnc_core(bad, fx.labels, fx.group, fx.rows, 0.2, 0.2, 0.0), DataError);
}

namespace {

// Separable two-group data with label-0 noise planted in group A's train
// rows; flipping every fifth eligible row keeps the pattern deterministic.
Dataset noisy_grouped_dataset(size_t n, std::vector<size_t>* planted_out) {
  Dataset ds;
  ds.feature_names = {"f0", "f1"};
  for (size_t i = 0; i < n; ++i) {
    int y = i % 3 == 0 ? 1 : 0;
    ds.labels.push_back(y);
    ds.group.push_back(i % 2 == 0 ? "A" : "B");
    ds.split.push_back(i % 10 == 9 ? Split::test : Split::train);
    ds.features.push_back(y == 1 ? 2.0 + 0.001 * static_cast<double>(i)
                                 : -2.0 - 0.001 * static_cast<double>(i));
    ds.features.push_back(static_cast<double>(i % 5));
  }
  ds.clean_labels = ds.labels;
  size_t count = 0;
  for (size_t i = 0; i < n; ++i) {
    bool eligible = ds.split[i] == Split::train && ds.group[i] == "A" && ds.clean_labels[i] == 0;
    if (!eligible) continue;
    if (count++ % 5 != 0) continue;
    ds.labels[i] = 1;
    if (planted_out) planted_out->push_back(i);
  }
  ds.validate();
  return ds;
}

EnsembleParams strong_params() {
  EnsembleParams p;
  p.n_learners = 21;
  p.max_depth = 5;
  p.min_leaf = 2;
  p.seed = 11;
  return p;
}

}  // namespace

TEST_CASE("fair_obnc repairs planted group-targeted noise") {
  std::vector<size_t> planted;
  Dataset ds = noisy_grouped_dataset(900, &planted);
  REQUIRE(planted.size() > 10);

  FairObncParams p;
  p.max_flip_rate = 0.3;
  p.disparity_target = 0.05;
  p.margin_threshold = 0.0;
  p.ensemble = strong_params();
  CorrectionResult res = fair_obnc(ds, p);

  auto train_rows = ds.rows_in_split(Split::train);
  std::vector<int> clean_t, noisy_t, fixed_t;
  std::vector<std::string> group_t;
  for (size_t r : train_rows) {
    clean_t.push_back(ds.clean_labels[r]);
    noisy_t.push_back(ds.labels[r]);
    fixed_t.push_back(res.labels[r]);
    group_t.push_back(ds.group[r]);
  }
  double before = reconstruction(clean_t, noisy_t, group_t).score;
  double after = reconstruction(clean_t, fixed_t, group_t).score;
  CHECK(after > before);

  // Flips only happen on train rows, within the cap, in the budget's
  // direction (A gained fake positives, so its flips go 1 -> 0).
  CHECK(res.report.flips_performed <=
        static_cast<size_t>(0.3 * static_cast<double>(train_rows.size())));
  for (const auto& f : res.report.flipped) {
    CHECK(ds.split[f.index] == Split::train);
    if (f.group == "A") {
      CHECK(f.old_label == 1);
      CHECK(f.new_label == 0);
    }
  }

  // Off-split labels are never edited.
  for (size_t r = 0; r < ds.n_rows(); ++r)
    if (ds.split[r] != Split::train) CHECK(res.labels[r] == ds.labels[r]);
}

TEST_CASE("fair_obnc honors excluded features end to end") {
  std::vector<size_t> planted;
  Dataset ds = noisy_grouped_dataset(400, &planted);
  FairObncParams p;
  p.ensemble = strong_params();
  p.excluded_features = {"f1"};
  CHECK_NOTHROW(fair_obnc(ds, p));

  p.excluded_features = {"f0", "f1"};
  CHECK_THROWS_AS(fair_obnc(ds, p), DataError);
}

TEST_CASE("obnc flips exactly the capped prefix of the ranking") {
  std::vector<size_t> planted;
  Dataset ds = noisy_grouped_dataset(900, &planted);
  auto train_rows = ds.rows_in_split(Split::train);

  FittedEnsemble ens = fit(ds, strong_params());
  MarginRanking ranking = rank_noisy(ens, ds, MarginMode::vote);
  REQUIRE(!ranking.indices.empty());

  SUBCASE("small cap") {
    CorrectionResult res = obnc(ds, 0.01, strong_params());
    size_t cap = static_cast<size_t>(std::floor(0.01 * static_cast<double>(train_rows.size())));
    size_t expected = std::min(cap, ranking.indices.size());
    CHECK(res.report.flips_performed == expected);
    CHECK(res.report.stop_reason == (expected < ranking.indices.size()
                                         ? StopReason::flip_cap_reached
                                         : StopReason::ranking_exhausted));
    for (size_t p = 0; p < expected; ++p) {
      size_t r = ranking.indices[p];
      CHECK(res.labels[r] == 1 - ds.labels[r]);
    }
  }
  SUBCASE("cap larger than the ranking") {
    CorrectionResult res = obnc(ds, 1.0, strong_params());
    CHECK(res.report.flips_performed == ranking.indices.size());
    CHECK(res.report.stop_reason == StopReason::ranking_exhausted);

    std::vector<int> clean_t, fixed_t, noisy_t;
    std::vector<std::string> group_t;
    for (size_t r : train_rows) {
      clean_t.push_back(ds.clean_labels[r]);
      fixed_t.push_back(res.labels[r]);
      noisy_t.push_back(ds.labels[r]);
      group_t.push_back(ds.group[r]);
    }
    CHECK(reconstruction(clean_t, fixed_t, group_t).score >
          reconstruction(clean_t, noisy_t, group_t).score);
  }
  SUBCASE("bad fraction") { CHECK_THROWS_AS(obnc(ds, 1.5, strong_params()), ConfigError); }
}

TEST_CASE("correction reports serialize to parseable JSON") {
  CoreFixture fx;
  auto ranking = fx.ranking({0, 5}, {0.9, 0.8});
  CorrectionResult res = fair_obnc_core(ranking, fx.labels, fx.group, fx.rows, 0.3, 0.2, 0.0);
  std::string text = report_json(res.report);
  nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc.at("method") == "fair_obnc");
  CHECK(doc.at("stop_reason") == "budget_exhausted");
  CHECK(doc.at("flips_performed") == 2);
  CHECK(doc.at("flipped").size() == 2);
  CHECK(doc.at("initial_budget").at("A") == -1);
  CHECK(doc.at("prevalence_after").at("B") == doctest::Approx(0.4));
}

TEST_CASE("stop reasons have stable names") {
  CHECK(std::string(stop_reason_name(StopReason::budget_exhausted)) == "budget_exhausted");
  CHECK(std::string(stop_reason_name(StopReason::flip_cap_reached)) == "flip_cap_reached");
  CHECK(std::string(stop_reason_name(StopReason::margin_below_threshold)) ==
        "margin_below_threshold");
  CHECK(std::string(stop_reason_name(StopReason::ranking_exhausted)) == "ranking_exhausted");
}
