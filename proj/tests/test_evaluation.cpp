#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "setvalued/evaluation.hpp"
#include "setvalued/oracle.hpp"
#include "test_support.hpp"

using namespace setvalued;
using testing_support::labeled_of;

namespace {

CalibratedClassifier fixed(FormulationKind kind, int L, std::optional<double> theta = {}) {
  CalibratedClassifier c;
  c.spec.kind = std::move(kind);
  c.num_classes = L;
  c.theta = theta;
  return c;
}

ScoreSet argmax_labeled() {
  return labeled_of(3, {{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.2, 0.6}, {0.5, 0.3, 0.2}},
                    {1, 2, 3, 1});
}

}  // namespace

TEST(Evaluate, PerfectTopOne) {
  const auto r = evaluate(fixed(formulation::TopK{1}, 3), argmax_labeled());
  EXPECT_EQ(r.avg_error, 0.0);
  EXPECT_EQ(r.avg_size, 1.0);
  ASSERT_TRUE(r.precision);
  EXPECT_EQ(*r.precision, 1.0);
  EXPECT_EQ(r.n_samples, 4u);
}

TEST(Evaluate, FullSet) {
  const auto r = evaluate(fixed(formulation::Penalized{0.0}, 3), argmax_labeled());
  EXPECT_EQ(r.avg_error, 0.0);
  EXPECT_EQ(r.avg_size, 3.0);
  EXPECT_DOUBLE_EQ(*r.precision, 1.0 / 3.0);
  // F_1 = 2 * recall / (1 + size).
  EXPECT_DOUBLE_EQ(r.f_beta, 2.0 / 4.0);
}

TEST(Evaluate, EmptySet) {
  const auto r = evaluate(fixed(formulation::Penalized{2.0}, 3), argmax_labeled());
  EXPECT_EQ(r.avg_error, 1.0);
  EXPECT_EQ(r.avg_size, 0.0);
  EXPECT_FALSE(r.precision);
  EXPECT_EQ(r.empty_set_rate, 1.0);
}

TEST(Evaluate, PerClassAndMissingLabels) {
  const auto r = evaluate(fixed(formulation::TopK{1}, 3),
                          labeled_of(3, {{0.7, 0.2, 0.1}, {0.6, 0.3, 0.1}}, {1, 2}));
  EXPECT_EQ(r.per_class_error.size(), 2u);
  EXPECT_EQ(r.per_class_error.at(1), 0.0);
  EXPECT_EQ(r.per_class_error.at(2), 1.0);
  EXPECT_FALSE(r.per_class_error.contains(3));
  try {
    evaluate(fixed(formulation::TopK{1}, 2), testing_support::scores_of(2, {{0.5, 0.5}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingLabels);
  }
}

TEST(EvaluateProperties, RecallErrorSizeAndNesting) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = testing_support::random_L(rng, 2, 10);
    const auto test = testing_support::random_labeled(rng, L, 1 + rng() % 300);
    double a = testing_support::uniform(rng);
    double b = testing_support::uniform(rng);
    if (a > b) std::swap(a, b);
    // threshold b is nested inside threshold a.
    const auto small = evaluate(fixed(formulation::Penalized{b}, L), test);
    const auto large = evaluate(fixed(formulation::Penalized{a}, L), test);
    ASSERT_EQ(small.recall + small.avg_error, 1.0);
    ASSERT_GE(small.avg_error, large.avg_error);
    ASSERT_LE(small.avg_size, large.avg_size);
    const auto sets = predict_all(fixed(formulation::Penalized{a}, L), test);
    double total = 0.0;
    for (const auto& s : sets) total += static_cast<double>(s.size());
    ASSERT_NEAR(large.avg_size, total / static_cast<double>(test.size()), 1e-12);
  }
}

TEST(Quantile, TypeSevenInterpolation) {
  EXPECT_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_EQ(quantile({0.0, 10.0}, 0.25), 2.5);
  EXPECT_EQ(quantile({4.0}, 0.9), 4.0);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(PerClassViolation, PerfectCoverage) {
  const auto v = per_class_violation(fixed(formulation::Penalized{0.0}, 3), argmax_labeled(), 0.1);
  for (const auto& [label, rate] : v.class_error) EXPECT_EQ(rate, 0.0);
  for (const auto& [pct, q] : v.quantiles) EXPECT_EQ(q, 0.0);
  EXPECT_EQ(v.violating_fraction, 0.0);
}

TEST(PerClassViolation, UniformLabelsTopOne) {
  // L = 2, p = (0.5, 0.5) everywhere, labels uniform: top-1 always predicts
  // class 1, so class 1 has rate 0 and class 2 rate 1; the pooled rate is
  // about one half.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    ScoreSet test(2);
    for (int i = 0; i < 2000; ++i) {
      test.add(testing_support::sample("u" + std::to_string(i), {0.5, 0.5},
                                       1 + static_cast<int>(rng() % 2)));
    }
    const auto c = fixed(formulation::TopK{1}, 2);
    const auto v = per_class_violation(c, test, 0.1);
    EXPECT_EQ(v.class_error.at(1), 0.0);
    EXPECT_EQ(v.class_error.at(2), 1.0);
    EXPECT_TRUE(v.violated.at(2));
    EXPECT_NEAR(evaluate(c, test).avg_error, 0.5, 0.05);
  }
}

TEST(PerClassViolation, AbsentClassIsOmitted) {
  const auto v = per_class_violation(
      fixed(formulation::TopK{1}, 3), labeled_of(3, {{0.7, 0.2, 0.1}}, {1}), 0.1);
  EXPECT_EQ(v.class_error.size(), 1u);
  EXPECT_FALSE(v.class_error.contains(2));
}

// ---------------------------------------------------------------------------
// Sweeps

class SweepTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto synth =
        oracle::synth_generate(oracle::Template::DirichletLike, 5, 6000, 17, 400);
    const auto& all = synth.sample.scores;
    calib_ = ScoreSet(5);
    test_ = ScoreSet(5);
    for (std::size_t i = 0; i < all.size(); ++i) (i % 2 ? test_ : calib_).add(all[i]);
  }
  ScoreSet calib_;
  ScoreSet test_;
};

TEST_F(SweepTest, TopKSizesExactAndErrorsNonIncreasing) {
  SweepOptions opts;
  opts.repeats = 3;
  const auto curve = sweep({formulation::TopK{1}}, {1, 2, 3, 4, 5}, calib_, test_, opts);
  ASSERT_EQ(curve.points.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_TRUE(curve.points[i].ok);
    EXPECT_EQ(curve.points[i].mean_size, static_cast<double>(i + 1));
    EXPECT_EQ(curve.points[i].std_size, 0.0);
    if (i > 0) {
      EXPECT_LE(curve.points[i].mean_error, curve.points[i - 1].mean_error);
    }
  }
  EXPECT_EQ(curve.points.back().mean_error, 0.0);
}

TEST_F(SweepTest, AverageSizeCurveNotAboveTopK) {
  SweepOptions opts;
  opts.repeats = 3;
  const std::vector<double> grid{1, 2, 3, 4};
  const auto topk = sweep({formulation::TopK{1}}, grid, calib_, test_, opts);
  const auto avg = sweep({formulation::AverageSize{1}}, grid, calib_, test_, opts);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ASSERT_TRUE(avg.points[i].ok) << avg.points[i].message;
    // Sizes agree up to sampling granularity; the error is no larger.
    EXPECT_NEAR(avg.points[i].mean_size, grid[i], 0.1);
    EXPECT_LE(avg.points[i].mean_error, topk.points[i].mean_error + 0.005);
  }
}

TEST_F(SweepTest, SinglePointSingleRepeat) {
  SweepOptions opts;
  opts.repeats = 1;
  const auto curve = sweep({formulation::AverageError{0.1}}, {0.1}, calib_, test_, opts);
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_EQ(curve.points[0].std_error, 0.0);
  EXPECT_EQ(curve.points[0].std_size, 0.0);
}

TEST_F(SweepTest, FailedPointsAreMarked) {
  SweepOptions opts;
  opts.repeats = 2;
  // ebar far below eps leaves the hybrid coverage function short of 1 - ebar.
  const auto curve =
      sweep({formulation::HybridError{0.0, 0.3}}, {0.0, 0.29}, calib_, test_, opts);
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_FALSE(curve.points[0].ok);
  EXPECT_NE(curve.points[0].message.find("InfeasiblePair"), std::string::npos);
  EXPECT_TRUE(curve.points[1].ok);
}

TEST_F(SweepTest, GridValidationAndDeterminism) {
  EXPECT_THROW(sweep({formulation::TopK{1}}, {}, calib_, test_), Error);
  EXPECT_THROW(sweep({formulation::TopK{1}}, {2, 1}, calib_, test_), Error);
  SweepOptions opts;
  opts.repeats = 2;
  opts.class_quantiles = true;
  const auto a = sweep({formulation::AverageSize{1}}, {1.5}, calib_, test_, opts);
  opts.threads = 3;
  const auto b = sweep({formulation::AverageSize{1}}, {1.5}, calib_, test_, opts);
  EXPECT_EQ(a.points[0].mean_error, b.points[0].mean_error);
  EXPECT_EQ(a.points[0].std_size, b.points[0].std_size);
  ASSERT_TRUE(a.points[0].violation_quantiles);
  EXPECT_EQ(a.points[0].violation_quantiles->size(), 5u);
}

// ---------------------------------------------------------------------------
// Histograms

TEST(Histogram, TopKSingleSizeBucket) {
  std::mt19937_64 rng(62);
  const auto test = testing_support::random_labeled(rng, 6, 600);
  const auto h = size_error_histogram(fixed(formulation::TopK{2}, 6), test, {0, 1, 2, 3, 6},
                                      {0, 0.5, 1});
  std::size_t total = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    for (auto c : h.counts[i]) {
      total += c;
      if (i != 2) {
        EXPECT_EQ(c, 0u);
      }
    }
  }
  EXPECT_EQ(total, 6u);
}

TEST(Histogram, FullSet) {
  std::mt19937_64 rng(63);
  const auto test = testing_support::random_labeled(rng, 4, 200);
  const auto h = size_error_histogram(fixed(formulation::Penalized{0.0}, 4), test,
                                      {0, 2, 4}, {0, 0.1, 1});
  EXPECT_EQ(h.counts[1][0], 4u);
}

TEST(Histogram, TwoRegimeIsBimodalUnderAverageError) {
  const auto synth = oracle::synth_generate(oracle::Template::TwoRegime, 10, 20000, 5, 1000);
  const auto c = fit_average_error(synth.sample.scores, 0.1);
  const auto sets = predict_all(c, synth.sample.scores);
  std::size_t small = 0;
  std::size_t large = 0;
  std::size_t middle = 0;
  for (const auto& s : sets) {
    if (s.size() <= 1) {
      ++small;
    } else if (s.size() >= 5) {
      ++large;
    } else {
      ++middle;
    }
  }
  // Easy points get singletons, ambiguous points near-full sets.
  EXPECT_GT(small, sets.size() / 3);
  EXPECT_GT(large, sets.size() / 3);
  EXPECT_EQ(middle, 0u);
}

TEST(Histogram, EmptyBins) {
  try {
    size_error_histogram(fixed(formulation::TopK{1}, 3), argmax_labeled(), {1}, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyBins);
  }
}
