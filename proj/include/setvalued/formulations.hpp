#pragma once

// The eight prediction rules. Each maps one probability vector, plus the
// fitted parameters of its formulation, to a label set.

#include <cmath>
#include <string>
#include <string_view>
#include <variant>

#include "setvalued/core.hpp"

namespace setvalued {

/// How the hybrid error rule combines its calibrated threshold with the
/// point-wise constraint.
enum class HybridErrorMode {
  /// { l : p_l >= theta } exactly.
  LemmaThreshold,
  /// { l : p_l >= theta } united with the point-wise error set at eps.
  UnionWithPointwise,
};

constexpr std::string_view to_string(HybridErrorMode m) {
  return m == HybridErrorMode::LemmaThreshold ? "lemma-threshold"
                                              : "union-with-pointwise";
}

namespace formulation {

struct TopK {
  int k = 1;
};
/// Smallest top-k set holding at least 1 - eps + offset of the mass.
/// With `auto_offset` the offset is resolved at calibration time.
struct PointwiseError {
  double eps = 0.1;
  double offset = 0.0;
  bool auto_offset = false;
};
struct Penalized {
  double lambda = 0.1;
};
struct AverageSize {
  double kbar = 1.0;
};
struct AverageError {
  double ebar = 0.05;
};
struct HybridSize {
  double kbar = 1.0;
  int k = 2;
};
struct HybridError {
  double ebar = 0.05;
  double eps = 0.1;
  HybridErrorMode mode = HybridErrorMode::LemmaThreshold;
};
struct FScore {
  double beta = 1.0;
};

}  // namespace formulation

using FormulationKind =
    std::variant<formulation::TopK, formulation::PointwiseError,
                 formulation::Penalized, formulation::AverageSize,
                 formulation::AverageError, formulation::HybridSize,
                 formulation::HybridError, formulation::FScore>;

struct FormulationSpec {
  FormulationKind kind;
  TieBreakPolicy tie = TieBreakPolicy::AscendingLabelIndex;
};

inline std::string_view formulation_name(const FormulationKind& kind) {
  struct Visitor {
    std::string_view operator()(const formulation::TopK&) const { return "top-k"; }
    std::string_view operator()(const formulation::PointwiseError&) const {
      return "pointwise-error";
    }
    std::string_view operator()(const formulation::Penalized&) const {
      return "penalized";
    }
    std::string_view operator()(const formulation::AverageSize&) const {
      return "average-size";
    }
    std::string_view operator()(const formulation::AverageError&) const {
      return "average-error";
    }
    std::string_view operator()(const formulation::HybridSize&) const {
      return "hybrid-size";
    }
    std::string_view operator()(const formulation::HybridError&) const {
      return "hybrid-error";
    }
    std::string_view operator()(const formulation::FScore&) const { return "fscore"; }
  };
  return std::visit(Visitor{}, kind);
}

/// True for the kinds whose rule thresholds at a fitted, distribution
/// dependent value.
inline bool needs_threshold(const FormulationKind& kind) {
  return std::holds_alternative<formulation::AverageSize>(kind) ||
         std::holds_alternative<formulation::AverageError>(kind) ||
         std::holds_alternative<formulation::HybridSize>(kind) ||
         std::holds_alternative<formulation::HybridError>(kind) ||
         std::holds_alternative<formulation::FScore>(kind);
}

namespace detail {

inline void check_k(int k, int lo, int num_classes) {
  if (k < lo || k > num_classes) {
    throw Error(ErrorKind::KOutOfRange,
                "k = " + std::to_string(k) + " outside [" + std::to_string(lo) +
                    ", " + std::to_string(num_classes) + "]",
                k);
  }
}

inline void check_eps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw Error(ErrorKind::InvalidEpsilon, "eps must lie in [0, 1]", eps);
  }
}

inline void check_offset(double offset, double eps) {
  if (!(offset >= 0.0 && offset <= eps)) {
    throw Error(ErrorKind::InvalidOffset, "offset must lie in [0, eps]", offset);
  }
}

}  // namespace detail

/// Checks parameter ranges against the class count. Throws on violation.
inline void validate_spec(const FormulationSpec& spec, int num_classes) {
  using namespace formulation;
  const double L = num_classes;
  if (num_classes < 2) throw Error(ErrorKind::TooFewClasses, "L must be >= 2");
  if (auto* f = std::get_if<TopK>(&spec.kind)) {
    detail::check_k(f->k, 0, num_classes);
  } else if (auto* f = std::get_if<PointwiseError>(&spec.kind)) {
    detail::check_eps(f->eps);
    if (!f->auto_offset) detail::check_offset(f->offset, f->eps);
  } else if (auto* f = std::get_if<Penalized>(&spec.kind)) {
    if (!(f->lambda >= 0.0)) {
      throw Error(ErrorKind::NegativeLambda, "lambda must be >= 0", f->lambda);
    }
  } else if (auto* f = std::get_if<AverageSize>(&spec.kind)) {
    if (!(f->kbar > 0.0 && f->kbar < L)) {
      throw Error(ErrorKind::KbarOutOfRange, "kbar must lie in (0, L)", f->kbar);
    }
  } else if (auto* f = std::get_if<AverageError>(&spec.kind)) {
    if (!(f->ebar > 0.0 && f->ebar < 1.0)) {
      throw Error(ErrorKind::EbarOutOfRange, "ebar must lie in (0, 1)", f->ebar);
    }
  } else if (auto* f = std::get_if<HybridSize>(&spec.kind)) {
    detail::check_k(f->k, 1, num_classes);
    if (!(f->kbar > 0.0)) {
      throw Error(ErrorKind::KbarOutOfRange, "kbar must be > 0", f->kbar);
    }
    if (!(f->kbar < f->k)) {
      throw Error(ErrorKind::ParameterOrderViolation, "hybrid size needs kbar < k",
                  f->kbar);
    }
  } else if (auto* f = std::get_if<HybridError>(&spec.kind)) {
    detail::check_eps(f->eps);
    if (!(f->ebar >= 0.0)) {
      throw Error(ErrorKind::EbarOutOfRange, "ebar must be >= 0", f->ebar);
    }
    if (!(f->ebar < f->eps)) {
      throw Error(ErrorKind::ParameterOrderViolation, "hybrid error needs ebar < eps",
                  f->ebar);
    }
  } else if (auto* f = std::get_if<FScore>(&spec.kind)) {
    if (!(f->beta > 0.0)) throw Error(ErrorKind::InvalidBeta, "beta must be > 0", f->beta);
  }
}

inline LabelSet predict_top_k(const ProbabilityVector& p, int k) {
  return top_indices(p, k);
}

/// Number of leading classes (in decreasing probability order) needed for
/// the cumulative mass to reach 1 - eps + offset. Falls back to L when
/// rounding keeps the total mass just under the target.
inline int pointwise_set_size(const ProbabilityVector& p, double eps, double offset) {
  detail::check_eps(eps);
  detail::check_offset(offset, eps);
  const double target = 1.0 - eps + offset;
  if (target <= 0.0) return 0;
  const auto order = descending_order(p);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += p[static_cast<std::size_t>(order[k])];
    if (cumulative >= target) return static_cast<int>(k + 1);
  }
  return static_cast<int>(p.size());
}

inline LabelSet predict_pointwise_error(const ProbabilityVector& p, double eps,
                                        double offset = 0.0) {
  return top_indices(p, pointwise_set_size(p, eps, offset));
}

inline LabelSet predict_penalized(const ProbabilityVector& p, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorKind::NegativeLambda, "lambda must be >= 0", lambda);
  }
  return threshold_set(p, lambda);
}

inline LabelSet predict_with_threshold(const ProbabilityVector& p, double theta) {
  return threshold_set(p, theta);
}

inline LabelSet predict_hybrid_size(const ProbabilityVector& p, double theta, int k) {
  detail::check_k(k, 1, static_cast<int>(p.size()));
  return set_intersection(threshold_set(p, theta), top_indices(p, k));
}

inline LabelSet predict_hybrid_error(const ProbabilityVector& p, double theta,
                                     double eps, HybridErrorMode mode) {
  auto thresholded = threshold_set(p, theta);
  if (mode == HybridErrorMode::LemmaThreshold) return thresholded;
  return set_union(thresholded, predict_pointwise_error(p, eps, 0.0));
}

inline LabelSet predict_fscore(const ProbabilityVector& p, double theta_star) {
  return threshold_set(p, theta_star);
}

}  // namespace setvalued
