#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "setvalued/calibration.hpp"
#include "setvalued/evaluation.hpp"
#include "setvalued/oracle.hpp"
#include "test_support.hpp"

using namespace setvalued;
using testing_support::labeled_of;
using testing_support::scores_of;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::UsageError;
}

/// Labeled set whose true-class scores are the given values; the other
/// class takes the rest of the mass.
ScoreSet with_true_scores(const std::vector<double>& true_scores) {
  ScoreSet s(2);
  for (std::size_t i = 0; i < true_scores.size(); ++i) {
    s.add(testing_support::sample("t" + std::to_string(i),
                                  {true_scores[i], 1.0 - true_scores[i]}, 1));
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Average size

TEST(FitAverageSize, OneSample) {
  const auto c = fit_average_size(scores_of(3, {{0.5, 0.3, 0.2}}), 2.0);
  ASSERT_TRUE(c.theta);
  EXPECT_EQ(*c.theta, 0.3);
}

TEST(FitAverageSize, TwoSamplesPooled) {
  const auto c = fit_average_size(scores_of(2, {{0.6, 0.4}, {0.8, 0.2}}), 1.0);
  EXPECT_EQ(*c.theta, 0.6);
}

TEST(FitAverageSize, FullBudgetGivesZeroThreshold) {
  // kbar = L itself is outside (0, L); just below it the threshold is the
  // smallest score, and the generalized inverse of G at L is 0.
  const auto s = scores_of(3, {{0.5, 0.3, 0.2}, {0.1, 0.1, 0.8}});
  EXPECT_EQ(generalized_inverse(empirical_size_function(s), 3.0).value, 0.0);
  EXPECT_EQ(kind_of([&] { fit_average_size(s, 3.0); }), ErrorKind::KbarOutOfRange);
}

TEST(FitAverageSize, Errors) {
  EXPECT_EQ(kind_of([] { fit_average_size(ScoreSet(3), 1.0); }), ErrorKind::EmptyScoreSet);
  EXPECT_EQ(kind_of([] { fit_average_size(scores_of(2, {{0.5, 0.5}}), 0.0); }),
            ErrorKind::KbarOutOfRange);
  // A budget below the weight of the single largest score cannot be met.
  EXPECT_EQ(kind_of([] { fit_average_size(scores_of(2, {{0.9, 0.1}, {0.9, 0.1}}), 0.5); }),
            ErrorKind::Saturated);
}

TEST(FitAverageSize, SizeFunctionBoundaryValues) {
  std::mt19937_64 rng(41);
  const auto s = testing_support::random_labeled(rng, 6, 50);
  EXPECT_DOUBLE_EQ(empirical_size_function(s)(0.0), 6.0);
}

TEST(FitAverageSize, CalibrationSetSizeWithinOneGranule) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = testing_support::random_L(rng, 2, 8);
    const std::size_t n = 1 + rng() % 200;
    const auto s = testing_support::random_labeled(rng, L, n);
    const double kbar = testing_support::uniform(rng, 0.05, L - 0.05);
    CalibratedClassifier c;
    try {
      c = fit_average_size(s, kbar);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::Saturated);
      continue;
    }
    const auto m = evaluate_predictions(predict_all(c, s), s);
    ASSERT_LE(m.avg_size, kbar + 1e-12);
    ASSERT_GE(m.avg_size, kbar - static_cast<double>(L) / static_cast<double>(n) - 1e-12);
  }
}

TEST(FitAverageSize, MatchesPenalizedAtFittedTheta) {
  std::mt19937_64 rng(43);
  const auto s = testing_support::random_labeled(rng, 7, 300);
  const auto c = fit_average_size(s, 2.5);
  for (const auto& x : s.samples()) {
    ASSERT_EQ(c.predict(x.probs), predict_penalized(x.probs, *c.theta));
  }
}

// ---------------------------------------------------------------------------
// Average error

TEST(FitAverageError, Examples) {
  EXPECT_EQ(*fit_average_error(with_true_scores({0.9, 0.7, 0.5, 0.1}), 0.25).theta, 0.5);
  EXPECT_EQ(*fit_average_error(with_true_scores({1.0, 1.0, 1.0}), 0.3).theta, 1.0);
  EXPECT_EQ(*fit_average_error(with_true_scores({0.9, 0.7}), 0.6).theta, 0.9);
}

TEST(FitAverageError, Errors) {
  EXPECT_EQ(kind_of([] { fit_average_error(scores_of(2, {{0.5, 0.5}}), 0.1); }),
            ErrorKind::MissingLabels);
  EXPECT_EQ(kind_of([] { fit_average_error(with_true_scores({0.5}), 1.0); }),
            ErrorKind::EbarOutOfRange);
}

TEST(FitAverageError, CalibrationErrorNeverExceedsBudget) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    const int L = testing_support::random_L(rng, 2, 8);
    const std::size_t n = 1 + rng() % 300;
    const auto s = testing_support::random_labeled(rng, L, n);
    const double ebar = testing_support::uniform(rng, 0.01, 0.99);
    const auto c = fit_average_error(s, ebar);
    const auto m = evaluate_predictions(predict_all(c, s), s);
    ASSERT_LE(m.avg_error, ebar + 1e-12);
    // The coverage function at theta reaches 1 - ebar.
    ASSERT_GE(empirical_coverage_function(s)(*c.theta), 1.0 - ebar - 1e-12);
  }
}

TEST(FitAverageError, CoverageFunctionStartsAtOne) {
  std::mt19937_64 rng(45);
  EXPECT_NEAR(empirical_coverage_function(testing_support::random_labeled(rng, 4, 37))(0.0),
              1.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Hybrid size

TEST(FitHybridSize, Examples) {
  const auto s = scores_of(3, {{0.5, 0.3, 0.2}});
  EXPECT_EQ(*fit_hybrid_size(s, 1.0, 2).theta, 0.5);
  EXPECT_EQ(*fit_hybrid_size(s, 1.5, 2).theta, 0.5);
  // Just below k the threshold sits one knot above the smallest top-k
  // score; at k itself the generalized inverse drops to 0.
  EXPECT_EQ(*fit_hybrid_size(s, 2.0 - 1e-9, 2).theta, 0.5);
  EXPECT_EQ(generalized_inverse(empirical_topk_size_function(s, 2), 2.0).value, 0.0);
  const auto many = scores_of(3, {{0.5, 0.3, 0.2}, {0.6, 0.25, 0.15}});
  EXPECT_EQ(*fit_hybrid_size(many, 1.99, 2).theta, 0.3);
}

TEST(FitHybridSize, Errors) {
  const auto s = scores_of(3, {{0.5, 0.3, 0.2}});
  EXPECT_EQ(kind_of([&] { fit_hybrid_size(s, 2.0, 2); }), ErrorKind::ParameterOrderViolation);
  EXPECT_EQ(kind_of([&] { fit_hybrid_size(ScoreSet(3), 1.0, 2); }), ErrorKind::EmptyScoreSet);
}

TEST(FitHybridSize, FullCapEqualsAverageSize) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = testing_support::random_L(rng, 2, 9);
    const auto s = testing_support::random_labeled(rng, L, 1 + rng() % 100);
    const double kbar = testing_support::uniform(rng, 0.5, L - 0.05);
    std::optional<double> a;
    std::optional<double> b;
    try {
      a = fit_average_size(s, kbar).theta;
    } catch (const Error&) {
    }
    try {
      b = fit_hybrid_size(s, kbar, L).theta;
    } catch (const Error&) {
    }
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      ASSERT_EQ(*a, *b);
    }
  }
}

TEST(FitHybridSize, TopKSizeFunctionStartsAtK) {
  std::mt19937_64 rng(47);
  const auto s = testing_support::random_labeled(rng, 6, 40);
  for (int k = 1; k <= 6; ++k) {
    EXPECT_NEAR(empirical_topk_size_function(s, k)(0.0), k, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Hybrid error

TEST(FitHybridError, Examples) {
  const auto s = scores_of(2, {{0.6, 0.4}});
  const auto h = empirical_hybrid_coverage_function(s, 0.5);
  ASSERT_EQ(h.scores().size(), 1u);
  EXPECT_EQ(h.scores()[0], 0.6);
  EXPECT_EQ(h.cumulative()[0], 0.6);
  EXPECT_EQ(*fit_hybrid_error(s, 0.45, 0.5).theta, 0.6);
  // ebar = eps violates ebar < eps; the level 1 - ebar = 0.5 is still
  // reached at the single knot.
  EXPECT_EQ(coverage_threshold(h, 0.5), 0.6);
  EXPECT_EQ(kind_of([&] { fit_hybrid_error(s, 0.5, 0.5); }),
            ErrorKind::ParameterOrderViolation);
  EXPECT_EQ(kind_of([&] { fit_hybrid_error(s, 0.3, 0.5); }), ErrorKind::InfeasiblePair);
}

TEST(FitHybridError, CoverageFunctionAtZero) {
  std::mt19937_64 rng(48);
  const auto s = testing_support::random_labeled(rng, 5, 60);
  const double eps = 0.2;
  double expected = 0.0;
  for (const auto& x : s.samples()) {
    expected += predict_pointwise_error(x.probs, eps).mass(x.probs) / 60.0;
  }
  const auto h = empirical_hybrid_coverage_function(s, eps);
  EXPECT_NEAR(h(0.0), expected, 1e-12);
  EXPECT_LE(h(0.0), 1.0 + 1e-12);
}

// ---------------------------------------------------------------------------
// F-score

TEST(FitFScore, Examples) {
  EXPECT_EQ(*fit_fscore(scores_of(2, {{1.0, 0.0}}), 1.0).theta, 0.5);
  EXPECT_NEAR(*fit_fscore(scores_of(2, {{0.5, 0.5}}), 1.0).theta, 1.0 / 3.0, 1e-12);
}

TEST(FitFScore, Bracket) {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testing_support::random_labeled(rng, testing_support::random_L(rng), 20);
    std::vector<ProbabilityVector> pts;
    for (const auto& x : s.samples()) pts.push_back(x.probs);
    const std::vector<double> w(pts.size(), 1.0 / 20.0);
    const double beta = testing_support::uniform(rng, 0.2, 3.0);
    EXPECT_NEAR(fscore_phi(pts, w, beta, 0.0), -1.0, 1e-12);
    EXPECT_NEAR(fscore_phi(pts, w, beta, 1.0), beta * beta, 1e-12);
    const auto root = fscore_root(pts, w, beta, 1e-12);
    EXPECT_LE(std::abs(fscore_phi(pts, w, beta, root.theta)), 1e-12);
  }
}

TEST(FitFScore, NonConvergence) {
  const auto s = scores_of(2, {{0.6, 0.4}});
  EXPECT_EQ(kind_of([&] { fit_fscore(s, 1.0, 1e-300); }), ErrorKind::NonConvergence);
  EXPECT_EQ(kind_of([&] { fit_fscore(s, 1.0, 0.0); }), ErrorKind::InvalidTolerance);
  EXPECT_EQ(kind_of([&] { fit_fscore(s, -1.0); }), ErrorKind::InvalidBeta);
}

// ---------------------------------------------------------------------------
// Offset, temperature, feasibility

TEST(PointwiseOffset, Examples) {
  EXPECT_DOUBLE_EQ(pointwise_offset(1000, 10), 0.1);
  EXPECT_EQ(pointwise_offset(10, 10), 1.0);
  EXPECT_EQ(pointwise_offset(3, 10), 1.0);
  EXPECT_EQ(kind_of([] { pointwise_offset(4, 1); }), ErrorKind::TooFewClasses);
}

TEST(FitTemperature, CalibratedLogitsGiveUnitTemperature) {
  const auto synth = oracle::synth_generate(oracle::Template::DirichletLike, 5, 20000, 3, 500);
  const auto fit = fit_temperature(synth.sample.scores, 1e-6);
  EXPECT_NEAR(fit.temperature, 1.0, 0.05);
  EXPECT_FALSE(fit.at_boundary);
}

TEST(FitTemperature, ScaledLogitsScaleTheTemperature) {
  const auto synth = oracle::synth_generate(oracle::Template::DirichletLike, 4, 3000, 4, 200);
  const auto& base = synth.sample.scores;
  ScoreSet scaled(base.num_classes());
  for (const auto& x : base.samples()) {
    Sample y = x;
    for (auto& z : *y.logits) z *= 2.0;
    y.probs = softmax(*y.logits);
    scaled.add(std::move(y));
  }
  const double tol = 1e-6;
  const double t0 = fit_temperature(base, tol).temperature;
  const double t2 = fit_temperature(scaled, tol).temperature;
  EXPECT_NEAR(t2, 2.0 * t0, 10 * tol);
}

TEST(FitTemperature, SingleSampleHitsBoundary) {
  ScoreSet s(3);
  Sample x;
  x.id = "only";
  x.logits = std::vector<double>{2.0, 0.0, -1.0};
  x.probs = softmax(*x.logits);
  x.label = 1;
  s.add(x);
  const auto fit = fit_temperature(s);
  EXPECT_TRUE(fit.at_boundary);
  EXPECT_NEAR(fit.temperature, kMinTemperature, 1e-5);
}

TEST(FitTemperature, Requirements) {
  EXPECT_EQ(kind_of([] { fit_temperature(labeled_of(2, {{0.5, 0.5}}, {1})); }),
            ErrorKind::MissingLogits);
  ScoreSet s(2);
  Sample x;
  x.id = "u";
  x.logits = std::vector<double>{0.0, 1.0};
  x.probs = softmax(*x.logits);
  s.add(x);
  EXPECT_EQ(kind_of([&] { fit_temperature(s); }), ErrorKind::MissingLabels);
}

TEST(Feasibility, Examples) {
  const auto perfect = labeled_of(3, {{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}}, {1, 2});
  auto f = feasibility_check(perfect, 1, 0.0);
  EXPECT_EQ(f.eps_k, 0.0);
  EXPECT_TRUE(f.feasible);
  const auto mixed = labeled_of(3, {{0.7, 0.2, 0.1}, {0.6, 0.3, 0.1}}, {1, 3});
  f = feasibility_check(mixed, 2, 0.1);
  EXPECT_EQ(f.eps_k, 0.5);
  EXPECT_FALSE(f.feasible);
  EXPECT_TRUE(feasibility_check(mixed, 2, 0.5).feasible);
  EXPECT_EQ(kind_of([] { feasibility_check(scores_of(2, {{0.5, 0.5}}), 1, 0.1); }),
            ErrorKind::MissingLabels);
}

// ---------------------------------------------------------------------------
// calibrate()

TEST(Calibrate, TopKNeedsNoThreshold) {
  const auto c = calibrate({formulation::TopK{2}}, scores_of(3, {{0.5, 0.3, 0.2}}));
  EXPECT_FALSE(c.theta);
  EXPECT_EQ(c.num_classes, 3);
  EXPECT_EQ(c.provenance.calibration_set_size, 1u);
}

TEST(Calibrate, AutomaticOffset) {
  std::mt19937_64 rng(50);
  const auto s = testing_support::random_labeled(rng, 10, 1000);
  formulation::PointwiseError pw{0.2, 0.0, true};
  const auto c = calibrate({pw}, s);
  EXPECT_DOUBLE_EQ(c.offset, 0.1);
  ASSERT_TRUE(c.provenance.offset_n);
  EXPECT_EQ(*c.provenance.offset_n, 1000u);
  // sqrt(10 / 1000) exceeds eps = 0.05.
  pw.eps = 0.05;
  EXPECT_EQ(kind_of([&] { calibrate({pw}, s); }), ErrorKind::InvalidOffset);
  CalibrationOptions opts;
  opts.offset_n = 100000;
  EXPECT_DOUBLE_EQ(calibrate({pw}, s, opts).offset, std::sqrt(1e-4));
}

TEST(Calibrate, FittedTemperatureIsAppliedBeforeThresholding) {
  const auto synth = oracle::synth_generate(oracle::Template::DirichletLike, 4, 2000, 5, 100,
                                            {0.5, true, "s"});
  CalibrationOptions opts;
  opts.temperature = std::nullopt;
  const auto c = calibrate({formulation::AverageSize{1.5}}, synth.sample.scores, opts);
  EXPECT_GT(c.temperature, 1.2);
  const auto direct =
      fit_average_size(synth.sample.scores.rescaled(c.temperature), 1.5).theta;
  EXPECT_EQ(*c.theta, *direct);
  const auto& x = synth.sample.scores[0];
  EXPECT_EQ(c.predict(x, 1.0), c.predict(softmax(*x.logits, c.temperature)));
}

TEST(Calibrate, ThreadCountDoesNotChangeFits) {
  std::mt19937_64 rng(51);
  const auto s = testing_support::random_labeled(rng, 8, 5000);
  using namespace formulation;
  for (const FormulationKind& kind :
       std::vector<FormulationKind>{AverageSize{2.2}, HybridSize{1.3, 3},
                                    HybridError{0.18, 0.2}, AverageError{0.1}}) {
    CalibrationOptions one;
    CalibrationOptions four;
    four.threads = 4;
    ASSERT_EQ(*calibrate({kind}, s, one).theta, *calibrate({kind}, s, four).theta);
  }
}
