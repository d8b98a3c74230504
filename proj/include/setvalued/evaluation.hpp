#pragma once

// Metrics and curves for set-valued classifiers on labeled test data:
// average error and size, per-class proxies for the point-wise error,
// precision/recall/F-beta, parameter sweeps and size/error histograms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "setvalued/calibration.hpp"
#include "setvalued/core.hpp"
#include "setvalued/formulations.hpp"
#include "setvalued/parallel.hpp"

namespace setvalued {

/// Predicted set for every sample, in input order.
inline std::vector<LabelSet> predict_all(const CalibratedClassifier& classifier,
                                         const ScoreSet& scores, unsigned threads = 1) {
  std::vector<LabelSet> out(scores.size());
  parallel_for(scores.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = classifier.predict(scores[i], scores.temperature());
    }
  });
  return out;
}

struct MetricsReport {
  std::size_t n_samples = 0;
  double avg_error = 0.0;
  double avg_size = 0.0;
  double recall = 0.0;
  /// Absent when every predicted set is empty.
  std::optional<double> precision;
  double beta = 1.0;
  double f_beta = 0.0;
  double empty_set_rate = 0.0;
  /// Keyed by true label; classes without test support are omitted.
  std::map<int, double> per_class_error;
  std::map<int, double> per_class_avg_size;
  std::map<int, std::size_t> per_class_support;
};

namespace detail {

struct ClassTally {
  std::size_t support = 0;
  std::size_t misses = 0;
  std::size_t total_size = 0;
};

inline std::map<int, ClassTally> tally_by_class(const ScoreSet& test,
                                                const std::vector<LabelSet>& sets) {
  std::map<int, ClassTally> tally;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& t = tally[*test[i].label];
    ++t.support;
    t.total_size += sets[i].size();
    if (!sets[i].contains(*test[i].label)) ++t.misses;
  }
  return tally;
}

}  // namespace detail

/// Metrics of precomputed predictions against the labels of `test`.
inline MetricsReport evaluate_predictions(const std::vector<LabelSet>& sets,
                                          const ScoreSet& test, double beta = 1.0) {
  test.require_labels("evaluate");
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidBeta, "beta must be > 0", beta);
  MetricsReport r;
  r.n_samples = test.size();
  r.beta = beta;
  if (test.empty()) return r;
  std::size_t misses = 0;
  std::size_t total_size = 0;
  std::size_t empties = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    total_size += sets[i].size();
    if (sets[i].empty()) ++empties;
    if (!sets[i].contains(*test[i].label)) ++misses;
  }
  const auto n = static_cast<double>(test.size());
  const std::size_t hits = test.size() - misses;
  r.avg_error = static_cast<double>(misses) / n;
  r.recall = static_cast<double>(hits) / n;
  r.avg_size = static_cast<double>(total_size) / n;
  r.empty_set_rate = static_cast<double>(empties) / n;
  if (total_size > 0) {
    r.precision = static_cast<double>(hits) / static_cast<double>(total_size);
  }
  const double b2 = beta * beta;
  r.f_beta = (1.0 + b2) * r.recall / (b2 + r.avg_size);
  for (const auto& [label, t] : detail::tally_by_class(test, sets)) {
    const auto support = static_cast<double>(t.support);
    r.per_class_support[label] = t.support;
    r.per_class_error[label] = static_cast<double>(t.misses) / support;
    r.per_class_avg_size[label] = static_cast<double>(t.total_size) / support;
  }
  return r;
}

inline MetricsReport evaluate(const CalibratedClassifier& classifier, const ScoreSet& test,
                              double beta = 1.0, unsigned threads = 1) {
  test.require_labels("evaluate");
  return evaluate_predictions(predict_all(classifier, test, threads), test, beta);
}

/// Linear interpolation between order statistics (the R type-7 rule).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline constexpr int kViolationPercentiles[] = {10, 25, 50, 75, 90};

struct ViolationReport {
  double eps = 0.0;
  std::map<int, double> class_error;
  std::map<int, bool> violated;
  /// Percentile (10, 25, 50, 75, 90) -> quantile of the class error rates.
  std::map<int, double> quantiles;
  double violating_fraction = 0.0;
};

inline ViolationReport violation_from_class_error(std::map<int, double> class_error,
                                                  double eps) {
  ViolationReport r;
  r.eps = eps;
  r.class_error = std::move(class_error);
  std::vector<double> rates;
  std::size_t violating = 0;
  for (const auto& [label, rate] : r.class_error) {
    rates.push_back(rate);
    r.violated[label] = rate > eps;
    if (rate > eps) ++violating;
  }
  for (int pct : kViolationPercentiles) r.quantiles[pct] = quantile(rates, pct / 100.0);
  if (!rates.empty()) {
    r.violating_fraction = static_cast<double>(violating) / static_cast<double>(rates.size());
  }
  return r;
}

/// Class-conditional error P(Y not in set | Y = y) as a proxy for the
/// point-wise error, with its quantiles and per-class violation flags.
inline ViolationReport per_class_violation(const CalibratedClassifier& classifier,
                                           const ScoreSet& test, double eps,
                                           unsigned threads = 1) {
  test.require_labels("per_class_violation");
  return violation_from_class_error(evaluate(classifier, test, 1.0, threads).per_class_error,
                                    eps);
}

// ---------------------------------------------------------------------------
// Sweeps

/// Copy of `spec` with its swept parameter set to `value`: k for top-k, eps
/// for point-wise error, lambda, kbar, ebar, kbar (hybrid size), ebar
/// (hybrid error) and beta respectively.
inline FormulationSpec with_parameter(FormulationSpec spec, double value) {
  using namespace formulation;
  std::visit(
      [&](auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TopK>) {
          f.k = static_cast<int>(std::lround(value));
        } else if constexpr (std::is_same_v<T, PointwiseError>) {
          f.eps = value;
        } else if constexpr (std::is_same_v<T, Penalized>) {
          f.lambda = value;
        } else if constexpr (std::is_same_v<T, AverageSize> || std::is_same_v<T, HybridSize>) {
          f.kbar = value;
        } else if constexpr (std::is_same_v<T, AverageError> ||
                             std::is_same_v<T, HybridError>) {
          f.ebar = value;
        } else {
          f.beta = value;
        }
      },
      spec.kind);
  return spec;
}

/// Bootstrap resample of `scores` (with replacement, same size).
inline ScoreSet bootstrap(const ScoreSet& scores, std::mt19937_64& rng) {
  ScoreSet out(scores.num_classes());
  out.set_temperature(scores.temperature());
  if (scores.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  for (std::size_t i = 0; i < scores.size(); ++i) out.add(scores[pick(rng)]);
  return out;
}

struct SweepPoint {
  double param = 0.0;
  bool ok = true;
  std::string message;
  double mean_error = 0.0;
  double std_error = 0.0;
  double mean_size = 0.0;
  double std_size = 0.0;
  /// Mean over repeats of the class-error quantiles, when requested.
  std::optional<std::map<int, double>> violation_quantiles;
};

struct SweepCurve {
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  int repeats = 10;
  std::uint64_t seed = 0;
  /// Resample the calibration set with replacement for every repeat.
  bool bootstrap = true;
  bool class_quantiles = false;
  CalibrationOptions calibration;
  unsigned threads = 1;
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    sd = 0.0;
    return;
  }
  CompensatedSum sq;
  for (double x : xs) sq.add((x - mean) * (x - mean));
  sd = std::sqrt(sq.value() / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// For every grid value: refit on `repeats` resamplings of `calib`, evaluate
/// on `test`, record mean and standard deviation. A point whose fit fails is
/// marked failed; the sweep goes on.
inline SweepCurve sweep(const FormulationSpec& family, const std::vector<double>& grid,
                        const ScoreSet& calib, const ScoreSet& test,
                        const SweepOptions& opts = {}) {
  if (grid.empty()) throw Error(ErrorKind::UsageError, "sweep grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorKind::UsageError, "sweep grid must be sorted");
  }
  if (opts.repeats < 1) throw Error(ErrorKind::UsageError, "repeats must be >= 1");
  test.require_labels("sweep");

  SweepCurve curve;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepPoint point;
    point.param = grid[g];
    std::vector<double> errors;
    std::vector<double> sizes;
    std::map<int, double> quantile_sum;
    try {
      const auto spec = with_parameter(family, grid[g]);
      for (int r = 0; r < opts.repeats; ++r) {
        // The resample depends on (seed, repeat) only, so every grid point
        // sees the same calibration sets.
        std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(r)};
        std::mt19937_64 rng(seq);
        const ScoreSet sample = opts.bootstrap ? bootstrap(calib, rng) : calib;
        auto copts = opts.calibration;
        copts.threads = opts.threads;
        const auto classifier = calibrate(spec, sample, copts);
        const auto report = evaluate(classifier, test, 1.0, opts.threads);
        errors.push_back(report.avg_error);
        sizes.push_back(report.avg_size);
        if (opts.class_quantiles) {
          const auto v = violation_from_class_error(report.per_class_error, 0.0);
          for (const auto& [pct, q] : v.quantiles) quantile_sum[pct] += q;
        }
      }
      detail::mean_std(errors, point.mean_error, point.std_error);
      detail::mean_std(sizes, point.mean_size, point.std_size);
      if (opts.class_quantiles) {
        for (auto& [pct, q] : quantile_sum) q /= opts.repeats;
        point.violation_quantiles = std::move(quantile_sum);
      }
    } catch (const Error& e) {
      point.ok = false;
      point.message = e.what();
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Histograms

struct SizeErrorHistogram {
  std::vector<double> size_edges;
  std::vector<double> error_edges;
  /// counts[i][j]: classes whose mean set size falls in size bucket i and
  /// whose error rate falls in error bucket j.
  std::vector<std::vector<std::size_t>> counts;
};

namespace detail {

/// Bucket [e_i, e_{i+1}); the last bucket is closed and values outside the
/// edges go to the nearest end bucket.
inline std::size_t bucket_of(const std::vector<double>& edges, double v) {
  const std::size_t buckets = edges.size() - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
      0, static_cast<std::ptrdiff_t>(it - edges.begin()) - 1));
  return std::min(idx, buckets - 1);
}

inline void check_edges(const std::vector<double>& edges, const char* what) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
    throw Error(ErrorKind::EmptyBins,
                std::string(what) + " needs at least two ascending edges");
  }
}

}  // namespace detail

inline SizeErrorHistogram size_error_histogram(const CalibratedClassifier& classifier,
                                               const ScoreSet& test,
                                               std::vector<double> size_edges,
                                               std::vector<double> error_edges,
                                               unsigned threads = 1) {
  detail::check_edges(size_edges, "size bins");
  detail::check_edges(error_edges, "error bins");
  const auto report = evaluate(classifier, test, 1.0, threads);
  SizeErrorHistogram h;
  h.counts.assign(size_edges.size() - 1,
                  std::vector<std::size_t>(error_edges.size() - 1, 0));
  for (const auto& [label, size] : report.per_class_avg_size) {
    const auto i = detail::bucket_of(size_edges, size);
    const auto j = detail::bucket_of(error_edges, report.per_class_error.at(label));
    ++h.counts[i][j];
  }
  h.size_edges = std::move(size_edges);
  h.error_edges = std::move(error_edges);
  return h;
}

}  // namespace setvalued
