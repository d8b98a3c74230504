#pragma once

// Fitting of every distribution dependent quantity: thresholds from the
// empirical size/coverage functions, the point-wise offset, temperature
// scaling, the F-score root and the feasibility check for average error
// combined with a point-wise size cap.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "setvalued/core.hpp"
#include "setvalued/formulations.hpp"
#include "setvalued/parallel.hpp"
#include "setvalued/step_function.hpp"

namespace setvalued {

struct Provenance {
  std::size_t calibration_set_size = 0;
  std::uint64_t seed = 0;
  /// Identifies the calibration input (a content digest when fitted from a
  /// file). Deliberately not a wall-clock time so refits are reproducible.
  std::string fitted_at = "in-memory";
  bool temperature_at_boundary = false;
  /// Sample count used for the automatic point-wise offset, when used.
  std::optional<std::size_t> offset_n;
};

/// A formulation together with its fitted quantities, ready to predict.
struct CalibratedClassifier {
  FormulationSpec spec;
  int num_classes = 0;
  std::optional<double> theta;
  double temperature = 1.0;
  double offset = 0.0;
  Provenance provenance;

  LabelSet predict(const ProbabilityVector& p) const;

  /// Applies the temperature first when it differs from the one the sample's
  /// probabilities were computed at.
  LabelSet predict(const Sample& s, double score_temperature = 1.0) const {
    if (temperature == score_temperature) return predict(s.probs);
    if (!s.logits) {
      throw Error(ErrorKind::MissingLogits,
                  "sample '" + s.id + "' has no logits to rescale with T = " +
                      std::to_string(temperature));
    }
    return predict(softmax(*s.logits, temperature));
  }
};

inline LabelSet CalibratedClassifier::predict(const ProbabilityVector& p) const {
  using namespace formulation;
  const auto fitted = [this]() {
    if (!theta) throw Error(ErrorKind::UsageError, "classifier has no fitted threshold");
    return *theta;
  };
  return std::visit(
      [&](const auto& f) -> LabelSet {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TopK>) {
          return predict_top_k(p, f.k);
        } else if constexpr (std::is_same_v<T, PointwiseError>) {
          return predict_pointwise_error(p, f.eps, offset);
        } else if constexpr (std::is_same_v<T, Penalized>) {
          return predict_penalized(p, f.lambda);
        } else if constexpr (std::is_same_v<T, AverageSize> ||
                             std::is_same_v<T, AverageError>) {
          return predict_with_threshold(p, fitted());
        } else if constexpr (std::is_same_v<T, HybridSize>) {
          return predict_hybrid_size(p, fitted(), f.k);
        } else if constexpr (std::is_same_v<T, HybridError>) {
          return predict_hybrid_error(p, fitted(), f.eps, f.mode);
        } else {
          return predict_fscore(p, fitted());
        }
      },
      spec.kind);
}

// ---------------------------------------------------------------------------
// Empirical step functions

namespace detail {

template <typename PerSample>
EmpiricalStepFunction build_step_function(const ScoreSet& scores, std::size_t per_sample,
                                          unsigned threads, PerSample&& fill) {
  std::vector<Knot> knots(scores.size() * per_sample, Knot{0.0, 0.0});
  parallel_for(scores.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      fill(scores[i], std::span<Knot>(knots).subspan(i * per_sample, per_sample));
    }
  });
  std::erase_if(knots, [](const Knot& k) { return k.weight == 0.0; });
  return EmpiricalStepFunction(std::move(knots));
}

}  // namespace detail

/// G^(t) = (1/N) sum_i sum_l 1{p_l(X_i) >= t}.
inline EmpiricalStepFunction empirical_size_function(const ScoreSet& scores,
                                                     unsigned threads = 1) {
  scores.require_nonempty("the size function");
  const double w = 1.0 / static_cast<double>(scores.size());
  const auto L = static_cast<std::size_t>(scores.num_classes());
  return detail::build_step_function(scores, L, threads, [&](const Sample& s, auto out) {
    for (std::size_t l = 0; l < L; ++l) out[l] = {s.probs[l], w};
  });
}

/// G^_k(t): like G^ but over the k largest scores of each sample only.
inline EmpiricalStepFunction empirical_topk_size_function(const ScoreSet& scores, int k,
                                                          unsigned threads = 1) {
  scores.require_nonempty("the top-k size function");
  detail::check_k(k, 1, scores.num_classes());
  const double w = 1.0 / static_cast<double>(scores.size());
  const auto kk = static_cast<std::size_t>(k);
  return detail::build_step_function(scores, kk, threads, [&](const Sample& s, auto out) {
    const auto order = descending_order(s.probs);
    for (std::size_t j = 0; j < kk; ++j) {
      out[j] = {s.probs[static_cast<std::size_t>(order[j])], w};
    }
  });
}

/// H^(t) = (1/n') sum_i 1{p_{Y_i}(X_i) >= t}.
inline EmpiricalStepFunction empirical_coverage_function(const ScoreSet& scores,
                                                         unsigned threads = 1) {
  scores.require_nonempty("the coverage function");
  scores.require_labels("the coverage function");
  const double w = 1.0 / static_cast<double>(scores.size());
  return detail::build_step_function(scores, 1, threads, [&](const Sample& s, auto out) {
    out[0] = {s.probs[static_cast<std::size_t>(*s.label - 1)], w};
  });
}

/// H^_eps(t) = (1/N) sum_i sum_{l <= k_eps(X_i)} p_(l)(X_i) 1{p_(l)(X_i) >= t}.
/// Unlabeled: only the score distribution enters.
inline EmpiricalStepFunction empirical_hybrid_coverage_function(const ScoreSet& scores,
                                                                double eps,
                                                                unsigned threads = 1) {
  scores.require_nonempty("the hybrid coverage function");
  const double w = 1.0 / static_cast<double>(scores.size());
  const auto L = static_cast<std::size_t>(scores.num_classes());
  return detail::build_step_function(scores, L, threads, [&](const Sample& s, auto out) {
    const auto order = descending_order(s.probs);
    const auto k_eps = static_cast<std::size_t>(pointwise_set_size(s.probs, eps, 0.0));
    for (std::size_t j = 0; j < k_eps; ++j) {
      const double p = s.probs[static_cast<std::size_t>(order[j])];
      out[j] = {p, p * w};
    }
  });
}

// ---------------------------------------------------------------------------
// Threshold fits

namespace detail {

inline CalibratedClassifier make_classifier(FormulationKind kind, const ScoreSet& scores,
                                            std::optional<double> theta) {
  CalibratedClassifier c;
  c.spec.kind = std::move(kind);
  c.num_classes = scores.num_classes();
  c.theta = theta;
  c.temperature = scores.temperature();
  c.provenance.calibration_set_size = scores.size();
  return c;
}

inline double require_unsaturated(const InverseResult& r, double level) {
  if (r.saturated) {
    throw Error(ErrorKind::Saturated,
                "the requested level is below the weight of the largest score", level);
  }
  return r.value;
}

}  // namespace detail

inline CalibratedClassifier fit_average_size(const ScoreSet& scores, double kbar,
                                             unsigned threads = 1) {
  formulation::AverageSize f{kbar};
  validate_spec({f}, scores.num_classes());
  const auto g = empirical_size_function(scores, threads);
  const double theta = detail::require_unsaturated(generalized_inverse(g, kbar), kbar);
  return detail::make_classifier(f, scores, theta);
}

/// The threshold is the ceil(n'(1 - ebar))-th largest true-class score, so
/// the calibration-set error never exceeds ebar.
inline CalibratedClassifier fit_average_error(const ScoreSet& scores, double ebar) {
  formulation::AverageError f{ebar};
  validate_spec({f}, scores.num_classes());
  scores.require_nonempty("fit_average_error");
  scores.require_labels("fit_average_error");
  std::vector<double> true_scores;
  true_scores.reserve(scores.size());
  for (const auto& s : scores.samples()) {
    true_scores.push_back(s.probs[static_cast<std::size_t>(*s.label - 1)]);
  }
  const auto n = static_cast<double>(true_scores.size());
  // 1e-9 absorbs products like 10000 * 0.95 = 9500.000000000002.
  auto rank = static_cast<std::size_t>(std::ceil(n * (1.0 - ebar) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, true_scores.size());
  std::nth_element(true_scores.begin(), true_scores.begin() + static_cast<long>(rank - 1),
                   true_scores.end(), std::greater<>());
  return detail::make_classifier(f, scores, true_scores[rank - 1]);
}

inline CalibratedClassifier fit_hybrid_size(const ScoreSet& scores, double kbar, int k,
                                            unsigned threads = 1) {
  formulation::HybridSize f{kbar, k};
  validate_spec({f}, scores.num_classes());
  const auto gk = empirical_topk_size_function(scores, k, threads);
  const double theta = detail::require_unsaturated(generalized_inverse(gk, kbar), kbar);
  return detail::make_classifier(f, scores, theta);
}

inline CalibratedClassifier fit_hybrid_error(
    const ScoreSet& scores, double ebar, double eps,
    HybridErrorMode mode = HybridErrorMode::LemmaThreshold, unsigned threads = 1) {
  formulation::HybridError f{ebar, eps, mode};
  validate_spec({f}, scores.num_classes());
  const auto h = empirical_hybrid_coverage_function(scores, eps, threads);
  const auto theta = coverage_threshold(h, 1.0 - ebar);
  if (!theta) {
    throw Error(ErrorKind::InfeasiblePair,
                "the hybrid coverage function peaks at " + std::to_string(h.total()) +
                    " < 1 - ebar",
                h.total());
  }
  return detail::make_classifier(f, scores, *theta);
}

// ---------------------------------------------------------------------------
// F-score

/// phi(theta) = beta^2 theta - sum_x w_x sum_l (p_l(x) - theta)_+ over
/// weighted probability vectors.
inline double fscore_phi(std::span<const ProbabilityVector> points,
                         std::span<const double> weights, double beta, double theta) {
  CompensatedSum excess;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double row = 0.0;
    for (double p : points[i].values()) row += std::max(p - theta, 0.0);
    excess.add(weights[i] * row);
  }
  return beta * beta * theta - excess.value();
}

struct FScoreRoot {
  double theta = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Bisection on [0, 1]; phi(0) = -1 and phi(1) = beta^2 bracket the unique
/// root because phi is strictly increasing.
inline FScoreRoot fscore_root(std::span<const ProbabilityVector> points,
                              std::span<const double> weights, double beta, double tol,
                              int max_iters = 200) {
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidBeta, "beta must be > 0", beta);
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidTolerance, "tol must be > 0", tol);
  double lo = 0.0;
  double hi = 1.0;
  FScoreRoot best{0.5, std::numeric_limits<double>::infinity(), 0};
  for (int it = 1; it <= max_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted at double precision
    const double phi = fscore_phi(points, weights, beta, mid);
    if (std::abs(phi) < std::abs(best.residual)) best = {mid, phi, it};
    if (std::abs(phi) <= tol) return best;
    if (phi < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorKind::NonConvergence,
              "bisection stopped with |phi| = " + std::to_string(std::abs(best.residual)),
              max_iters);
}

inline CalibratedClassifier fit_fscore(const ScoreSet& scores, double beta,
                                       double tol = 1e-12) {
  formulation::FScore f{beta};
  validate_spec({f}, scores.num_classes());
  scores.require_nonempty("fit_fscore");
  std::vector<ProbabilityVector> points;
  points.reserve(scores.size());
  for (const auto& s : scores.samples()) points.push_back(s.probs);
  const std::vector<double> weights(scores.size(), 1.0 / static_cast<double>(scores.size()));
  const auto root = fscore_root(points, weights, beta, tol);
  return detail::make_classifier(f, scores, root.theta);
}

// ---------------------------------------------------------------------------
// Offset, temperature, feasibility

/// r_{n,L} = sqrt(L / n), capped at 1. A heuristic, not a finite-sample bound.
inline double pointwise_offset(std::size_t n, int num_classes) {
  if (num_classes < 2) throw Error(ErrorKind::TooFewClasses, "L must be >= 2");
  if (n < 1) throw Error(ErrorKind::EmptyScoreSet, "n must be >= 1");
  return std::min(1.0, std::sqrt(static_cast<double>(num_classes) / static_cast<double>(n)));
}

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

/// Mean negative log-likelihood of softmax(logits / t) at the true labels.
inline double temperature_nll(const ScoreSet& scores, double t) {
  CompensatedSum total;
  for (const auto& s : scores.samples()) {
    const auto& z = *s.logits;
    double max_z = z[0] / t;
    for (double v : z) max_z = std::max(max_z, v / t);
    double denom = 0.0;
    for (double v : z) denom += std::exp(v / t - max_z);
    total.add(max_z + std::log(denom) - z[static_cast<std::size_t>(*s.label - 1)] / t);
  }
  return total.value() / static_cast<double>(scores.size());
}

struct TemperatureFit {
  double temperature = 1.0;
  /// The minimiser sits at an end of [kMinTemperature, kMaxTemperature].
  bool at_boundary = false;
};

/// Golden-section search for the NLL minimiser. The NLL is convex in 1/T,
/// hence unimodal in T.
inline TemperatureFit fit_temperature(const ScoreSet& scores, double tol = 1e-6) {
  scores.require_nonempty("fit_temperature");
  if (!scores.all_have_logits()) {
    throw Error(ErrorKind::MissingLogits, "fit_temperature needs logits on every sample");
  }
  scores.require_labels("fit_temperature");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidTolerance, "tol must be > 0", tol);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kMinTemperature;
  double b = kMaxTemperature;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = temperature_nll(scores, c);
  double fd = temperature_nll(scores, d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = temperature_nll(scores, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = temperature_nll(scores, d);
    }
  }
  const double t = 0.5 * (a + b);
  const bool boundary = t - kMinTemperature <= 2 * tol || kMaxTemperature - t <= 2 * tol;
  return {t, boundary};
}

struct Feasibility {
  double eps_k = 0.0;
  bool feasible = true;
};

/// eps_k = fraction of samples whose label falls outside the top-k set. An
/// average error budget below eps_k cannot be met with sets of size <= k.
inline Feasibility feasibility_check(const ScoreSet& scores, int k, double ebar) {
  scores.require_nonempty("feasibility_check");
  scores.require_labels("feasibility_check");
  detail::check_k(k, 1, scores.num_classes());
  std::size_t misses = 0;
  for (const auto& s : scores.samples()) {
    if (!top_indices(s.probs, k).contains(*s.label)) ++misses;
  }
  const double eps_k = static_cast<double>(misses) / static_cast<double>(scores.size());
  return {eps_k, ebar >= eps_k};
}

// ---------------------------------------------------------------------------
// One-call calibration

struct CalibrationOptions {
  /// nullopt: fit the temperature on the calibration set (needs logits and
  /// labels). Otherwise use the given value.
  std::optional<double> temperature = 1.0;
  double temperature_tol = 1e-6;
  /// Sample count n for the automatic offset sqrt(L / n); defaults to the
  /// calibration set size.
  std::optional<std::size_t> offset_n;
  double fscore_tol = 1e-12;
  std::uint64_t seed = 0;
  std::string fitted_at = "in-memory";
  unsigned threads = 1;
};

/// Fits whatever `spec` needs on `scores` and returns a ready classifier.
inline CalibratedClassifier calibrate(const FormulationSpec& spec, const ScoreSet& input,
                                      const CalibrationOptions& opts = {}) {
  using namespace formulation;
  validate_spec(spec, input.num_classes());

  ScoreSet rescaled;
  const ScoreSet* scores = &input;
  bool boundary = false;
  double temperature = input.temperature();
  if (!opts.temperature) {
    const auto fit = fit_temperature(input, opts.temperature_tol);
    temperature = fit.temperature;
    boundary = fit.at_boundary;
  } else {
    temperature = *opts.temperature;
    if (!(temperature > 0.0)) {
      throw Error(ErrorKind::UsageError, "temperature must be > 0", temperature);
    }
  }
  if (temperature != input.temperature()) {
    rescaled = input.rescaled(temperature);
    scores = &rescaled;
  }

  CalibratedClassifier c = std::visit(
      [&](const auto& f) -> CalibratedClassifier {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, AverageSize>) {
          return fit_average_size(*scores, f.kbar, opts.threads);
        } else if constexpr (std::is_same_v<T, AverageError>) {
          return fit_average_error(*scores, f.ebar);
        } else if constexpr (std::is_same_v<T, HybridSize>) {
          return fit_hybrid_size(*scores, f.kbar, f.k, opts.threads);
        } else if constexpr (std::is_same_v<T, HybridError>) {
          return fit_hybrid_error(*scores, f.ebar, f.eps, f.mode, opts.threads);
        } else if constexpr (std::is_same_v<T, FScore>) {
          return fit_fscore(*scores, f.beta, opts.fscore_tol);
        } else {
          return detail::make_classifier(f, *scores, std::nullopt);
        }
      },
      spec.kind);
  c.spec = spec;
  c.temperature = temperature;
  c.provenance.calibration_set_size = input.size();
  c.provenance.seed = opts.seed;
  c.provenance.fitted_at = opts.fitted_at;
  c.provenance.temperature_at_boundary = boundary;

  if (const auto* pw = std::get_if<PointwiseError>(&spec.kind)) {
    if (pw->auto_offset) {
      const std::size_t n = opts.offset_n.value_or(input.size());
      c.offset = pointwise_offset(n, input.num_classes());
      c.provenance.offset_n = n;
      detail::check_offset(c.offset, pw->eps);
    } else {
      c.offset = pw->offset;
    }
  }
  return c;
}

}  // namespace setvalued
