#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fairobnc/errors.hpp"
#include "fairobnc/metrics.hpp"

using namespace fairobnc;

TEST_CASE("reconstruction of identical labels is perfect") {
  std::vector<int> clean = {1, 0, 1, 0, 0};
  std::vector<std::string> group = {"A", "A", "B", "B", "B"};
  ReconstructionMetrics m = reconstruction(clean, clean, group);
  CHECK(m.score == 1.0);
  CHECK(*m.fpr == 0.0);
  CHECK(*m.fnr == 0.0);
  CHECK(*m.per_group.at("A").fpr == 0.0);
  CHECK(*m.per_group.at("B").fnr == 0.0);
}

TEST_CASE("reconstruction of fully inverted labels is zero") {
  std::vector<int> clean = {1, 0, 1};
  std::vector<int> corrected = {0, 1, 0};
  std::vector<std::string> group = {"A", "A", "A"};
  ReconstructionMetrics m = reconstruction(clean, corrected, group);
  CHECK(m.score == 0.0);
  CHECK(*m.fpr == 1.0);
  CHECK(*m.fnr == 1.0);
}

TEST_CASE("reconstruction counts decompose exactly") {
  std::vector<int> clean = {1, 1, 0, 0, 0, 1, 0};
  std::vector<int> corrected = {1, 0, 0, 1, 0, 1, 1};
  std::vector<std::string> group = {"A", "A", "A", "B", "B", "B", "B"};
  ReconstructionMetrics m = reconstruction(clean, corrected, group);

  // Hand count: tp rows 0,5; fn row 1; fp rows 3,6; tn rows 2,4.
  CHECK(m.tp == 2);
  CHECK(m.fn == 1);
  CHECK(m.fp == 2);
  CHECK(m.tn == 2);
  CHECK(m.tp + m.tn + m.fp + m.fn == 7);
  CHECK(m.score == doctest::Approx(4.0 / 7.0));
  CHECK(std::llround(m.score * 7.0) + m.fp + m.fn == 7);
  CHECK(*m.fpr == 0.5);                       // 2 of 4 clean negatives
  CHECK(*m.fnr == doctest::Approx(1.0 / 3.0));  // 1 of 3 clean positives

  // Group A: clean pos {0,1}, neg {2}; fn row 1 only.
  CHECK(*m.per_group.at("A").fnr == 0.5);
  CHECK(*m.per_group.at("A").fpr == 0.0);
  // Group B: clean pos {5}, neg {3,4,6}; fp rows 3 and 6.
  CHECK(*m.per_group.at("B").fnr == 0.0);
  CHECK(*m.per_group.at("B").fpr == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("reconstruction omits rates with empty denominators") {
  std::vector<int> clean = {1, 1};
  std::vector<int> corrected = {1, 0};
  std::vector<std::string> group = {"A", "A"};
  ReconstructionMetrics m = reconstruction(clean, corrected, group);
  CHECK_FALSE(m.fpr.has_value());  // no clean negatives at all
  REQUIRE(m.fnr.has_value());
  CHECK(*m.fnr == 0.5);
  CHECK_FALSE(m.per_group.at("A").fpr.has_value());
}

TEST_CASE("reconstruction validates input alignment") {
  CHECK_THROWS_AS(reconstruction({1}, {1, 0}, {"A", "A"}), DataError);
  CHECK_THROWS_AS(reconstruction({}, {}, {}), DataError);
}

TEST_CASE("top_fraction_threshold selects ceil(q*m) instances") {
  SUBCASE("one percent of one hundred is exactly one") {
    std::vector<double> scores(100);
    std::iota(scores.begin(), scores.end(), 0.0);
    ThresholdResult r = top_fraction_threshold(scores, 0.01);
    long long selected = std::accumulate(r.labels.begin(), r.labels.end(), 0LL);
    CHECK(selected == 1);
    CHECK(r.labels[99] == 1);
    CHECK(r.threshold == 99.0);
  }
  SUBCASE("fraction one selects everything") {
    std::vector<double> scores = {0.5, 0.1, 0.9};
    ThresholdResult r = top_fraction_threshold(scores, 1.0);
    CHECK(r.labels == std::vector<int>{1, 1, 1});
    CHECK(r.threshold == 0.1);
  }
  SUBCASE("fractional counts round up") {
    std::vector<double> scores = {7, 6, 5, 4, 3, 2, 1};
    ThresholdResult r = top_fraction_threshold(scores, 0.5);  // ceil(3.5) = 4
    long long selected = std::accumulate(r.labels.begin(), r.labels.end(), 0LL);
    CHECK(selected == 4);
    CHECK(r.threshold == 4.0);
  }
  SUBCASE("boundary ties resolve by ascending index") {
    std::vector<double> scores = {0.5, 0.9, 0.5, 0.5};
    ThresholdResult r = top_fraction_threshold(scores, 0.5);  // k = 2
    CHECK(r.labels == std::vector<int>{1, 1, 0, 0});
    CHECK(r.threshold == 0.5);
  }
  SUBCASE("tiny fraction still selects one") {
    std::vector<double> scores = {1.0, 2.0};
    ThresholdResult r = top_fraction_threshold(scores, 1e-6);
    CHECK(r.labels == std::vector<int>{0, 1});
  }
  SUBCASE("argument validation") {
    CHECK_THROWS_AS(top_fraction_threshold({1.0}, 0.0), ConfigError);
    CHECK_THROWS_AS(top_fraction_threshold({1.0}, 1.5), ConfigError);
    CHECK_THROWS_AS(top_fraction_threshold({}, 0.5), DataError);
  }
}

TEST_CASE("tpr counts recovered positives") {
  CHECK(tpr({1, 0, 1, 0}, {1, 1, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(tpr({0, 0}, {1, 1}) == 0.0);
  CHECK(tpr({1, 1}, {1, 1}) == 1.0);
  CHECK_THROWS_AS(tpr({1, 0}, {0, 0}), DataError);
  CHECK_THROWS_AS(tpr({1}, {1, 1}), DataError);
}

TEST_CASE("dp_ratio is the min over max group positive rate") {
  std::vector<std::string> group = {"A", "A", "A", "A", "B", "B", "B", "B", "B", "B"};

  SUBCASE("half as many positives gives one half") {
    //                        A: 1/4            B: 3/6
    std::vector<int> pred = {1, 0, 0, 0, 1, 1, 1, 0, 0, 0};
    CHECK(dp_ratio(pred, group) == doctest::Approx(0.25 / 0.5));
  }
  SUBCASE("equal rates give parity") {
    std::vector<int> pred = {1, 1, 0, 0, 1, 1, 1, 0, 0, 0};
    CHECK(dp_ratio(pred, group) == 1.0);
  }
  SUBCASE("all-zero predictions count as parity") {
    std::vector<int> pred(10, 0);
    CHECK(dp_ratio(pred, group) == 1.0);
  }
  SUBCASE("one starved group drives the ratio to zero") {
    std::vector<int> pred = {0, 0, 0, 0, 1, 1, 0, 0, 0, 0};
    CHECK(dp_ratio(pred, group) == 0.0);
  }
  SUBCASE("empty input is rejected") { CHECK_THROWS_AS(dp_ratio({}, {}), DataError); }
}

TEST_CASE("auc matches hand-computed pair counts") {
  SUBCASE("perfect and inverted orderings") {
    CHECK(auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == 0.0);
  }
  SUBCASE("five sixths of pairs ordered correctly") {
    CHECK(auc({0.9, 0.8, 0.7, 0.6, 0.5}, {1, 1, 0, 1, 0}) == doctest::Approx(5.0 / 6.0));
  }
  SUBCASE("constant scores give exactly one half") {
    CHECK(auc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}) == 0.5);
  }
  SUBCASE("ties average") {
    // Positives {1.0, 0.5}, negative {0.5}: one win, one tie -> 0.75.
    CHECK(auc({1.0, 0.5, 0.5}, {1, 1, 0}) == 0.75);
  }
  SUBCASE("single-class inputs score one half by convention") {
    CHECK(auc({0.1, 0.9}, {1, 1}) == 0.5);
    CHECK(auc({0.1, 0.9}, {0, 0}) == 0.5);
  }
}

TEST_CASE("pearson correlation on known data") {
  CHECK(pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(pearson({1, 2, 3, 4}, {5, 5, 5, 5}) == 0.0);
  // Hand value: x = {1,2,3}, y = {1,3,2}: cov = 0.5... r = 0.5.
  CHECK(pearson({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(pearson({1.0}, {1.0, 2.0}), DataError);
}
