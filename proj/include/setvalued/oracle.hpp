#pragma once

// Ground truth for desk-scale verification: finite distributions with known
// conditional probabilities, exact population error/size, exact versions of
// the size and coverage functions, brute-force solvers for every
// formulation, and a reproducible synthetic score generator.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "setvalued/calibration.hpp"
#include "setvalued/core.hpp"
#include "setvalued/formulations.hpp"
#include "setvalued/parallel.hpp"
#include "setvalued/step_function.hpp"

namespace setvalued::oracle {

struct SupportPoint {
  std::string id;
  double marginal = 0.0;
  ProbabilityVector cond;
  /// Present for synthetic distributions; cond == softmax(logits).
  std::optional<std::vector<double>> logits;
};

inline constexpr double kMarginalTolerance = 1e-12;

/// A finite joint law of (X, Y): marginal P(x) on a finite support and the
/// conditional class probabilities p(x) at every support point.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  DiscreteDistribution(int num_classes, std::vector<SupportPoint> points)
      : num_classes_(num_classes), points_(std::move(points)) {
    validate();
  }

  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return points_.size(); }
  const SupportPoint& operator[](std::size_t i) const { return points_[i]; }
  std::span<const SupportPoint> points() const noexcept { return points_; }

 private:
  void validate() const {
    if (num_classes_ < 2) throw Error(ErrorKind::TooFewClasses, "L must be >= 2");
    if (points_.empty()) throw Error(ErrorKind::InvalidDistribution, "empty support");
    CompensatedSum total;
    for (const auto& p : points_) {
      if (!(p.marginal >= 0.0)) {
        throw Error(ErrorKind::InvalidDistribution,
                    "negative marginal at '" + p.id + "'", p.marginal);
      }
      if (static_cast<int>(p.cond.size()) != num_classes_) {
        throw Error(ErrorKind::ClassCountMismatch, "point '" + p.id + "' has wrong L");
      }
      validate_probability_vector(p.cond.values());
      total.add(p.marginal);
    }
    if (std::abs(total.value() - 1.0) > kMarginalTolerance) {
      throw Error(ErrorKind::InvalidDistribution, "marginals sum to " +
                                                      std::to_string(total.value()),
                  total.value());
    }
  }

  int num_classes_ = 0;
  std::vector<SupportPoint> points_;
};

/// An arbitrary set-valued classifier on the support: sets[i] is the
/// prediction at support point i.
struct AssignmentClassifier {
  std::vector<LabelSet> sets;
};

template <typename Rule>
AssignmentClassifier assign(const DiscreteDistribution& dist, Rule&& rule) {
  AssignmentClassifier g;
  g.sets.reserve(dist.size());
  for (const auto& p : dist.points()) g.sets.push_back(rule(p.cond));
  return g;
}

namespace detail {
inline void check_assignment(const DiscreteDistribution& dist,
                             const AssignmentClassifier& g) {
  if (g.sets.size() != dist.size()) {
    throw Error(ErrorKind::UsageError, "assignment does not cover the support");
  }
}
}  // namespace detail

/// P(Y not in G(X)) = sum_x P(x) (1 - sum_{l in G(x)} p_l(x)).
inline double exact_error(const DiscreteDistribution& dist, const AssignmentClassifier& g) {
  detail::check_assignment(dist, g);
  CompensatedSum total;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    total.add(dist[i].marginal * (1.0 - g.sets[i].mass(dist[i].cond)));
  }
  return total.value();
}

/// E|G(X)| = sum_x P(x) |G(x)|.
inline double exact_size(const DiscreteDistribution& dist, const AssignmentClassifier& g) {
  detail::check_assignment(dist, g);
  CompensatedSum total;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    total.add(dist[i].marginal * static_cast<double>(g.sets[i].size()));
  }
  return total.value();
}

// ---------------------------------------------------------------------------
// Exact population functions

struct ExactFunctions {
  EmpiricalStepFunction G;
  EmpiricalStepFunction H;
  /// G_k[k - 1] for k = 1..L.
  std::vector<EmpiricalStepFunction> G_k;
  std::optional<EmpiricalStepFunction> H_eps;
};

/// G(t) = sum_l P(p_l(X) >= t), H(t) = P(p_Y(X) >= t),
/// G_k(t) = sum_{l <= k} P(p_(l)(X) >= t) and, when `eps` is given,
/// H_eps(t) = E[sum_{l <= k_eps(X)} p_(l)(X) 1{p_(l)(X) >= t}].
inline ExactFunctions exact_threshold_functions(const DiscreteDistribution& dist,
                                                std::optional<double> eps = std::nullopt) {
  const auto L = static_cast<std::size_t>(dist.num_classes());
  std::vector<Knot> g;
  std::vector<Knot> h;
  std::vector<std::vector<Knot>> gk(L);
  std::vector<Knot> he;
  for (const auto& x : dist.points()) {
    const auto order = descending_order(x.cond);
    for (std::size_t l = 0; l < L; ++l) {
      g.push_back({x.cond[l], x.marginal});
      h.push_back({x.cond[l], x.marginal * x.cond[l]});
    }
    for (std::size_t k = 1; k <= L; ++k) {
      for (std::size_t j = 0; j < k; ++j) {
        gk[k - 1].push_back({x.cond[static_cast<std::size_t>(order[j])], x.marginal});
      }
    }
    if (eps) {
      const auto k_eps = static_cast<std::size_t>(pointwise_set_size(x.cond, *eps, 0.0));
      for (std::size_t j = 0; j < k_eps; ++j) {
        const double p = x.cond[static_cast<std::size_t>(order[j])];
        he.push_back({p, x.marginal * p});
      }
    }
  }
  ExactFunctions f;
  f.G = EmpiricalStepFunction(std::move(g));
  f.H = EmpiricalStepFunction(std::move(h));
  for (auto& knots : gk) f.G_k.emplace_back(std::move(knots));
  if (eps) f.H_eps = EmpiricalStepFunction(std::move(he));
  return f;
}

/// eps_k = P(Y not in Top(X, k)), via exact_error of the top-k assignment.
inline double exact_topk_error(const DiscreteDistribution& dist, int k) {
  return exact_error(dist, assign(dist, [k](const auto& p) { return top_indices(p, k); }));
}

/// Root of theta -> beta^2 theta - sum_l E(p_l(X) - theta)_+ at population level.
inline FScoreRoot population_fscore_root(const DiscreteDistribution& dist, double beta,
                                         double tol = 1e-13) {
  std::vector<ProbabilityVector> pts;
  std::vector<double> w;
  for (const auto& x : dist.points()) {
    pts.push_back(x.cond);
    w.push_back(x.marginal);
  }
  return fscore_root(pts, w, beta, tol);
}

/// Population F-beta of an assignment: (1 + b^2) P(Y in G) / (b^2 + E|G|).
inline double exact_fbeta(const DiscreteDistribution& dist, const AssignmentClassifier& g,
                          double beta) {
  const double b2 = beta * beta;
  return (1.0 + b2) * (1.0 - exact_error(dist, g)) / (b2 + exact_size(dist, g));
}

// ---------------------------------------------------------------------------
// Brute force

inline constexpr double kBruteForceLimit = 1e7;
/// Constraint slack for comparisons of exact sums computed in different
/// orders.
inline constexpr double kConstraintSlack = 1e-12;
inline constexpr double kObjectiveTie = 1e-13;

/// "Average error + point-wise size": minimise E|G| subject to
/// P(Y not in G) <= ebar and |G(x)| <= k. Not one of the eight prediction
/// rules; it exists to confirm infeasibility.
struct ErrorWithSizeCap {
  double ebar = 0.0;
  int k = 1;
};

struct BruteForceResult {
  bool feasible = false;
  AssignmentClassifier assignment;
  /// The optimised quantity: error (top-k, average size, hybrid size), size
  /// (point-wise error, average error, hybrid error, error + size cap),
  /// error + lambda * size (penalized) or the F-beta score (maximised).
  double objective = 0.0;
  double error = 0.0;
  double size = 0.0;
  std::uint64_t evaluated = 0;
};

namespace detail {

struct MaskTable {
  // mass[i][m]: probability mass of subset m at point i.
  std::vector<std::vector<double>> mass;
  int num_classes = 0;
  std::uint64_t subsets = 0;
};

inline MaskTable mask_table(const DiscreteDistribution& dist) {
  MaskTable t;
  t.num_classes = dist.num_classes();
  t.subsets = std::uint64_t{1} << t.num_classes;
  for (const auto& x : dist.points()) {
    std::vector<double> m(t.subsets, 0.0);
    for (std::uint64_t mask = 1; mask < t.subsets; ++mask) {
      double s = 0.0;
      for (int l = 0; l < t.num_classes; ++l) {
        if (mask >> l & 1U) s += x.cond[static_cast<std::size_t>(l)];
      }
      m[mask] = s;
    }
    t.mass.push_back(std::move(m));
  }
  return t;
}

/// Lexicographic comparison of (objective, secondary) with a tie tolerance;
/// on a full tie the earlier candidate (lexicographically smaller masks)
/// is kept.
inline bool better(double obj, double sec, double best_obj, double best_sec) {
  if (obj < best_obj - kObjectiveTie) return true;
  if (obj > best_obj + kObjectiveTie) return false;
  return sec < best_sec - kObjectiveTie;
}

/// Per-point problem: minimise objective(mass, size) subject to
/// allowed(mass, size) independently at every point.
template <typename Allowed, typename Objective, typename Secondary>
BruteForceResult solve_pointwise(const DiscreteDistribution& dist, Allowed&& allowed,
                                 Objective&& objective, Secondary&& secondary) {
  const auto table = mask_table(dist);
  BruteForceResult r;
  r.feasible = true;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    std::optional<std::uint64_t> best;
    double best_obj = 0.0;
    double best_sec = 0.0;
    for (std::uint64_t mask = 0; mask < table.subsets; ++mask) {
      const double mass = table.mass[i][mask];
      const int size = std::popcount(mask);
      ++r.evaluated;
      if (!allowed(mass, size)) continue;
      const double obj = objective(mass, size);
      const double sec = secondary(mass, size);
      if (!best || better(obj, sec, best_obj, best_sec)) {
        best = mask;
        best_obj = obj;
        best_sec = sec;
      }
    }
    if (!best) {
      r.feasible = false;
      return r;
    }
    r.assignment.sets.push_back(LabelSet::from_mask(dist.num_classes(), *best));
  }
  r.error = exact_error(dist, r.assignment);
  r.size = exact_size(dist, r.assignment);
  return r;
}

/// Joint problem over all assignments. `allowed` filters subsets per point;
/// `feasible(error, size)` is the average constraint; `objective(error,
/// size)` is minimised with `secondary` as tie-break.
///
/// The subset chosen at the first point splits the enumeration into blocks.
/// Blocks are searched independently and reduced in block order, so the
/// result does not depend on `workers`.
template <typename Allowed, typename Feasible, typename Objective, typename Secondary>
BruteForceResult solve_joint(const DiscreteDistribution& dist, Allowed&& allowed,
                             Feasible&& feasible, Objective&& objective,
                             Secondary&& secondary, unsigned workers = 1) {
  const double combos =
      std::pow(std::pow(2.0, dist.num_classes()), static_cast<double>(dist.size()));
  if (combos > kBruteForceLimit) {
    throw Error(ErrorKind::TooLargeForBruteForce,
                std::to_string(combos) + " joint assignments exceed the limit", combos);
  }
  const auto table = mask_table(dist);
  const std::size_t m = dist.size();
  // Candidate subsets per point, ascending mask order.
  std::vector<std::vector<std::uint64_t>> candidates(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::uint64_t mask = 0; mask < table.subsets; ++mask) {
      if (allowed(table.mass[i][mask], std::popcount(mask))) candidates[i].push_back(mask);
    }
  }

  struct Block {
    bool found = false;
    std::vector<std::uint64_t> masks;
    double obj = 0.0;
    double sec = 0.0;
    std::uint64_t evaluated = 0;
  };
  std::vector<Block> blocks(candidates[0].size());
  parallel_for(blocks.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint64_t> current(m, 0);
    for (std::size_t b = begin; b < end; ++b) {
      Block& best = blocks[b];
      auto recurse = [&](auto&& self, std::size_t i, double err, double size) -> void {
        if (i == m) {
          ++best.evaluated;
          if (!feasible(err, size)) return;
          const double obj = objective(err, size);
          const double sec = secondary(err, size);
          if (!best.found || better(obj, sec, best.obj, best.sec)) {
            best.found = true;
            best.masks = current;
            best.obj = obj;
            best.sec = sec;
          }
          return;
        }
        const double w = dist[i].marginal;
        for (std::uint64_t mask : candidates[i]) {
          current[i] = mask;
          self(self, i + 1, err + w * (1.0 - table.mass[i][mask]),
               size + w * static_cast<double>(std::popcount(mask)));
        }
      };
      const std::uint64_t first = candidates[0][b];
      current[0] = first;
      recurse(recurse, 1, dist[0].marginal * (1.0 - table.mass[0][first]),
              dist[0].marginal * static_cast<double>(std::popcount(first)));
    }
  });

  BruteForceResult r;
  const Block* winner = nullptr;
  for (const auto& b : blocks) {
    r.evaluated += b.evaluated;
    if (b.found && (!winner || better(b.obj, b.sec, winner->obj, winner->sec))) winner = &b;
  }
  if (!winner) return r;
  r.feasible = true;
  for (std::uint64_t mask : winner->masks) {
    r.assignment.sets.push_back(LabelSet::from_mask(dist.num_classes(), mask));
  }
  r.error = exact_error(dist, r.assignment);
  r.size = exact_size(dist, r.assignment);
  return r;
}

}  // namespace detail

/// Exact constrained optimum by exhaustive enumeration. Point-wise
/// formulations are solved point by point; average constraints enumerate
/// every joint assignment and refuse beyond kBruteForceLimit of them.
/// Objective ties go to the other quantity (smaller size for error
/// objectives, smaller error for size objectives), then to the
/// lexicographically smallest assignment.
inline BruteForceResult brute_force_optimal(const DiscreteDistribution& dist,
                                            const FormulationSpec& spec,
                                            unsigned workers = 1) {
  using namespace formulation;
  validate_spec(spec, dist.num_classes());
  const auto any = [](double, int) { return true; };
  const auto always = [](double, double) { return true; };
  const auto err_of = [](double mass, int) { return 1.0 - mass; };
  const auto size_of = [](double, int size) { return static_cast<double>(size); };
  const auto by_error = [](double e, double) { return e; };
  const auto by_size = [](double, double s) { return s; };

  BruteForceResult r = std::visit(
      [&](const auto& f) -> BruteForceResult {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TopK>) {
          return detail::solve_pointwise(
              dist, [k = f.k](double, int size) { return size <= k; }, err_of, size_of);
        } else if constexpr (std::is_same_v<T, PointwiseError>) {
          const double target = 1.0 - f.eps + f.offset;
          return detail::solve_pointwise(
              dist, [target](double mass, int) { return mass >= target - kConstraintSlack; },
              size_of, err_of);
        } else if constexpr (std::is_same_v<T, Penalized>) {
          return detail::solve_pointwise(
              dist, any,
              [lambda = f.lambda](double mass, int size) { return 1.0 - mass + lambda * size; },
              size_of);
        } else if constexpr (std::is_same_v<T, AverageSize>) {
          return detail::solve_joint(
              dist, any,
              [kbar = f.kbar](double, double s) { return s <= kbar + kConstraintSlack; },
              by_error, by_size, workers);
        } else if constexpr (std::is_same_v<T, AverageError>) {
          return detail::solve_joint(
              dist, any,
              [ebar = f.ebar](double e, double) { return e <= ebar + kConstraintSlack; },
              by_size, by_error, workers);
        } else if constexpr (std::is_same_v<T, HybridSize>) {
          return detail::solve_joint(
              dist, [k = f.k](double, int size) { return size <= k; },
              [kbar = f.kbar](double, double s) { return s <= kbar + kConstraintSlack; },
              by_error, by_size, workers);
        } else if constexpr (std::is_same_v<T, HybridError>) {
          const double target = 1.0 - f.eps;
          return detail::solve_joint(
              dist, [target](double mass, int) { return mass >= target - kConstraintSlack; },
              [ebar = f.ebar](double e, double) { return e <= ebar + kConstraintSlack; },
              by_size, by_error, workers);
        } else {
          const double b2 = f.beta * f.beta;
          return detail::solve_joint(
              dist, any, always,
              [b2](double e, double s) { return -(1.0 + b2) * (1.0 - e) / (b2 + s); },
              by_size, workers);
        }
      },
      spec.kind);
  if (r.feasible) {
    if (const auto* f = std::get_if<Penalized>(&spec.kind)) {
      r.objective = r.error + f->lambda * r.size;
    } else if (const auto* f = std::get_if<FScore>(&spec.kind)) {
      r.objective = exact_fbeta(dist, r.assignment, f->beta);
    } else if (std::holds_alternative<TopK>(spec.kind) ||
               std::holds_alternative<AverageSize>(spec.kind) ||
               std::holds_alternative<HybridSize>(spec.kind)) {
      r.objective = r.error;
    } else {
      r.objective = r.size;
    }
  }
  return r;
}

inline BruteForceResult brute_force_optimal(const DiscreteDistribution& dist,
                                            const ErrorWithSizeCap& problem,
                                            unsigned workers = 1) {
  setvalued::detail::check_k(problem.k, 1, dist.num_classes());
  auto r = detail::solve_joint(
      dist, [k = problem.k](double, int size) { return size <= k; },
      [ebar = problem.ebar](double e, double) { return e <= ebar + kConstraintSlack; },
      [](double, double s) { return s; }, [](double e, double) { return e; }, workers);
  if (r.feasible) r.objective = r.size;
  return r;
}

// ---------------------------------------------------------------------------
// Hybrid error: compare the two combine modes against the brute force

struct HybridModeOutcome {
  HybridErrorMode mode = HybridErrorMode::LemmaThreshold;
  double theta = 0.0;
  double error = 0.0;
  double size = 0.0;
  bool average_ok = false;
  bool pointwise_ok = false;
};

struct HybridErrorComparison {
  std::optional<double> theta;  // absent when H_eps never reaches 1 - ebar
  std::vector<HybridModeOutcome> modes;
  BruteForceResult optimum;
};

/// Evaluates both hybrid error rules at the exact-population threshold and
/// reports their objective and constraint status next to the brute-force
/// optimum. It does not pick a winner.
inline HybridErrorComparison compare_hybrid_error_modes(const DiscreteDistribution& dist,
                                                        double ebar, double eps) {
  HybridErrorComparison out;
  const auto fns = exact_threshold_functions(dist, eps);
  out.theta = coverage_threshold(*fns.H_eps, 1.0 - ebar);
  out.optimum = brute_force_optimal(dist, {formulation::HybridError{ebar, eps}});
  if (!out.theta) return out;
  for (auto mode : {HybridErrorMode::LemmaThreshold, HybridErrorMode::UnionWithPointwise}) {
    const auto g = assign(dist, [&](const auto& p) {
      return predict_hybrid_error(p, *out.theta, eps, mode);
    });
    HybridModeOutcome o;
    o.mode = mode;
    o.theta = *out.theta;
    o.error = exact_error(dist, g);
    o.size = exact_size(dist, g);
    o.average_ok = o.error <= ebar + kConstraintSlack;
    o.pointwise_ok = true;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (g.sets[i].mass(dist[i].cond) < 1.0 - eps - kConstraintSlack) o.pointwise_ok = false;
    }
    out.modes.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equivalence suite: closed-form rules against the brute force

struct EquivalenceCheck {
  std::string name;
  bool passed = false;
  /// The brute force refused (too many joint assignments).
  bool skipped = false;
  /// Reported without a verdict (hybrid error modes).
  bool informational = false;
  double rule_objective = 0.0;
  double brute_objective = 0.0;
  std::string detail;
};

struct SuiteOptions {
  std::vector<double> eps = {0.05, 0.2, 0.5};
  std::vector<double> lambdas = {0.1, 0.25, 0.5};
  /// Hybrid error pairs (ebar, eps) to report both combine modes for.
  std::vector<std::pair<double, double>> hybrid_error = {{0.1, 0.3}};
  double tolerance = 1e-12;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool joint_enumerable(const DiscreteDistribution& dist) {
  return std::pow(std::pow(2.0, dist.num_classes()), static_cast<double>(dist.size())) <=
         kBruteForceLimit;
}

inline EquivalenceCheck skipped_family(std::string name) {
  EquivalenceCheck c;
  c.name = std::move(name);
  c.skipped = true;
  c.passed = true;
  c.detail = "too many joint assignments for the brute force";
  return c;
}

/// Levels strictly inside (lo, hi) taken by a step function at its knots.
/// Constraint levels at knots make the greedy threshold rule exactly optimal
/// on a finite support, where no intermediate level is attainable by a
/// deterministic rule.
inline std::vector<double> knot_levels(const EmpiricalStepFunction& f, double lo, double hi) {
  std::vector<double> out;
  for (double c : f.cumulative()) {
    if (c > lo + 1e-9 && c < hi - 1e-9) out.push_back(c);
  }
  return out;
}

template <typename Body>
void run_check(std::vector<EquivalenceCheck>& out, std::string name, Body&& body) {
  EquivalenceCheck c;
  c.name = std::move(name);
  try {
    body(c);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::TooLargeForBruteForce) {
      c.skipped = true;
      c.passed = true;
      c.detail = e.message();
    } else {
      c.passed = false;
      c.detail = e.what();
    }
  }
  out.push_back(std::move(c));
}

}  // namespace detail

/// Checks every closed-form rule against brute_force_optimal on `dist`:
/// top-k for all k, point-wise error and penalized on the configured
/// parameters (set equality and objective), average size, average error and
/// hybrid size at every constraint level the exact population functions take
/// at a knot, and the infeasibility of average error under a size cap.
/// Hybrid error is reported for both combine modes without a verdict.
inline std::vector<EquivalenceCheck> equivalence_suite(const DiscreteDistribution& dist,
                                                       const SuiteOptions& opts = {}) {
  using namespace formulation;
  std::vector<EquivalenceCheck> out;
  const int L = dist.num_classes();
  const double tol = opts.tolerance;
  const auto fns = exact_threshold_functions(dist);

  const auto close = [tol](double a, double b) { return std::abs(a - b) <= tol; };

  for (int k = 1; k <= L; ++k) {
    detail::run_check(out, "top-k k=" + std::to_string(k), [&](EquivalenceCheck& c) {
      const auto g = assign(dist, [k](const auto& p) { return predict_top_k(p, k); });
      const auto bf = brute_force_optimal(dist, {TopK{k}});
      c.rule_objective = exact_error(dist, g);
      c.brute_objective = bf.objective;
      c.passed = bf.feasible && close(c.rule_objective, c.brute_objective);
    });
  }
  for (double eps : opts.eps) {
    detail::run_check(out, "pointwise-error eps=" + detail::fmt(eps),
                      [&](EquivalenceCheck& c) {
      const auto g =
          assign(dist, [eps](const auto& p) { return predict_pointwise_error(p, eps); });
      const auto bf = brute_force_optimal(dist, {PointwiseError{eps}});
      c.rule_objective = exact_size(dist, g);
      c.brute_objective = bf.objective;
      bool same_sets = bf.feasible;
      for (std::size_t i = 0; same_sets && i < dist.size(); ++i) {
        same_sets = g.sets[i] == bf.assignment.sets[i];
      }
      c.passed = same_sets && close(c.rule_objective, c.brute_objective);
      if (!same_sets) c.detail = "sets differ from the brute force";
    });
  }
  for (double lambda : opts.lambdas) {
    detail::run_check(out, "penalized lambda=" + detail::fmt(lambda),
                      [&](EquivalenceCheck& c) {
      const auto g =
          assign(dist, [lambda](const auto& p) { return predict_penalized(p, lambda); });
      const auto bf = brute_force_optimal(dist, {Penalized{lambda}});
      c.rule_objective = exact_error(dist, g) + lambda * exact_size(dist, g);
      c.brute_objective = bf.objective;
      c.passed = bf.feasible && close(c.rule_objective, c.brute_objective);
    });
  }
  if (!detail::joint_enumerable(dist)) {
    for (const char* family : {"average-size", "average-error", "hybrid-size",
                               "size-cap feasibility", "hybrid-error"}) {
      out.push_back(detail::skipped_family(family));
    }
    return out;
  }
  for (double kbar : detail::knot_levels(fns.G, 0.0, L)) {
    detail::run_check(out, "average-size kbar=" + detail::fmt(kbar),
                      [&](EquivalenceCheck& c) {
      const auto theta = generalized_inverse(fns.G, kbar);
      const auto g = assign(dist, [&](const auto& p) {
        return predict_with_threshold(p, theta.value);
      });
      const auto bf = brute_force_optimal(dist, {AverageSize{kbar}});
      c.rule_objective = exact_error(dist, g);
      c.brute_objective = bf.objective;
      const bool constraint = exact_size(dist, g) <= kbar + tol;
      c.passed = !theta.saturated && bf.feasible && constraint &&
                 close(c.rule_objective, c.brute_objective);
      if (!constraint) c.detail = "size constraint violated";
    });
  }
  for (double level : detail::knot_levels(fns.H, 0.0, 1.0)) {
    const double ebar = 1.0 - level;
    detail::run_check(out, "average-error ebar=" + detail::fmt(ebar),
                      [&](EquivalenceCheck& c) {
      const auto theta = coverage_threshold(fns.H, 1.0 - ebar);
      if (!theta) throw Error(ErrorKind::InfeasiblePair, "H never reaches 1 - ebar");
      const auto g =
          assign(dist, [&](const auto& p) { return predict_with_threshold(p, *theta); });
      const auto bf = brute_force_optimal(dist, {AverageError{ebar}});
      c.rule_objective = exact_size(dist, g);
      c.brute_objective = bf.objective;
      const bool constraint = exact_error(dist, g) <= ebar + tol;
      c.passed = bf.feasible && constraint && close(c.rule_objective, c.brute_objective);
      if (!constraint) c.detail = "error constraint violated";
    });
  }
  for (int k = 1; k < L; ++k) {
    const auto& gk = fns.G_k[static_cast<std::size_t>(k - 1)];
    for (double kbar : detail::knot_levels(gk, 0.0, k)) {
      detail::run_check(out,
                        "hybrid-size k=" + std::to_string(k) + " kbar=" + detail::fmt(kbar),
                        [&](EquivalenceCheck& c) {
        const auto theta = generalized_inverse(gk, kbar);
        const auto g = assign(dist, [&](const auto& p) {
          return predict_hybrid_size(p, theta.value, k);
        });
        const auto bf = brute_force_optimal(dist, {HybridSize{kbar, k}});
        c.rule_objective = exact_error(dist, g);
        c.brute_objective = bf.objective;
        const bool constraint = exact_size(dist, g) <= kbar + tol;
        c.passed = !theta.saturated && bf.feasible && constraint &&
                   close(c.rule_objective, c.brute_objective);
        if (!constraint) c.detail = "size constraint violated";
      });
    }
  }
  for (int k = 1; k < L; ++k) {
    const double eps_k = exact_topk_error(dist, k);
    if (eps_k <= 1e-9) continue;
    for (double ebar : {0.5 * eps_k, eps_k + 0.5 * (1.0 - eps_k)}) {
      detail::run_check(out,
                        "size-cap feasibility k=" + std::to_string(k) +
                            " ebar=" + detail::fmt(ebar),
                        [&](EquivalenceCheck& c) {
        const auto bf = brute_force_optimal(dist, ErrorWithSizeCap{ebar, k});
        const bool expect_feasible = ebar >= eps_k;
        c.rule_objective = expect_feasible ? 1.0 : 0.0;
        c.brute_objective = bf.feasible ? 1.0 : 0.0;
        c.passed = bf.feasible == expect_feasible;
        c.detail = "eps_k=" + detail::fmt(eps_k);
      });
    }
  }
  for (const auto& [ebar, eps] : opts.hybrid_error) {
    detail::run_check(out,
                      "hybrid-error ebar=" + detail::fmt(ebar) + " eps=" + detail::fmt(eps),
                      [&](EquivalenceCheck& c) {
      const auto cmp = compare_hybrid_error_modes(dist, ebar, eps);
      c.passed = true;
      c.informational = true;
      c.brute_objective = cmp.optimum.feasible ? cmp.optimum.objective : 0.0;
      std::ostringstream os;
      os << "optimum " << (cmp.optimum.feasible ? "size=" + detail::fmt(cmp.optimum.size)
                                                : std::string("infeasible"));
      if (!cmp.theta) os << "; H_eps never reaches 1 - ebar";
      for (const auto& m : cmp.modes) {
        os << "; " << to_string(m.mode) << " size=" << detail::fmt(m.size)
           << " error=" << detail::fmt(m.error)
           << " average=" << (m.average_ok ? "ok" : "violated")
           << " pointwise=" << (m.pointwise_ok ? "ok" : "violated");
      }
      c.detail = os.str();
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic distributions and samples

enum class Template { TwoRegime, DirichletLike, NearDeterministic };

constexpr std::string_view to_string(Template t) {
  switch (t) {
    case Template::TwoRegime: return "two-regime";
    case Template::DirichletLike: return "dirichlet-like";
    case Template::NearDeterministic: return "near-deterministic";
  }
  return "unknown";
}

inline Template parse_template(std::string_view name) {
  if (name == "two-regime") return Template::TwoRegime;
  if (name == "dirichlet-like") return Template::DirichletLike;
  if (name == "near-deterministic") return Template::NearDeterministic;
  throw Error(ErrorKind::UsageError, "unknown template '" + std::string(name) + "'");
}

/// A synthetic distribution on `support` points built from random logits.
///
/// two-regime: the first half of the support is easy (one class holds almost
/// all mass), the second half is ambiguous (nearly uniform).
/// dirichlet-like: Gaussian logits with a per-point scale in [0.5, 4], so
/// confidence varies smoothly across the support.
/// near-deterministic: one dominant class per point with a wide margin.
inline DiscreteDistribution make_distribution(Template tmpl, int num_classes,
                                              std::size_t support, std::uint64_t seed) {
  if (num_classes < 2) throw Error(ErrorKind::TooFewClasses, "L must be >= 2");
  if (support < 1) throw Error(ErrorKind::UsageError, "support must be >= 1");
  std::seed_seq seq{seed, std::uint64_t{0x5e7}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, num_classes - 1);
  const auto L = static_cast<std::size_t>(num_classes);

  std::vector<SupportPoint> points(support);
  std::vector<double> weights(support);
  for (std::size_t i = 0; i < support; ++i) {
    std::vector<double> z(L);
    switch (tmpl) {
      case Template::TwoRegime: {
        if (i < (support + 1) / 2) {
          const auto c = static_cast<std::size_t>(pick_class(rng));
          for (auto& v : z) v = 0.5 * gauss(rng);
          z[c] += 12.0;
        } else {
          for (auto& v : z) v = 0.05 * gauss(rng);
        }
        break;
      }
      case Template::DirichletLike: {
        const double scale = 0.5 + 3.5 * unif(rng);
        for (auto& v : z) v = scale * gauss(rng);
        break;
      }
      case Template::NearDeterministic: {
        const auto c = static_cast<std::size_t>(pick_class(rng));
        for (auto& v : z) v = 0.5 * gauss(rng);
        z[c] += 4.0 + 2.0 * unif(rng);
        break;
      }
    }
    points[i].id = "x" + std::to_string(i);
    points[i].cond = softmax(z);
    points[i].logits = std::move(z);
    weights[i] = 0.5 + unif(rng);
  }
  CompensatedSum total;
  for (double w : weights) total.add(w);
  for (std::size_t i = 0; i < support; ++i) points[i].marginal = weights[i] / total.value();
  return DiscreteDistribution(num_classes, std::move(points));
}

/// Small random distribution for brute-force checks: exponential weights
/// normalised per point, all L * m entries pairwise distinct.
inline DiscreteDistribution make_random_distribution(int num_classes, std::size_t support,
                                                     std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  const auto L = static_cast<std::size_t>(num_classes);
  for (;;) {
    std::vector<SupportPoint> points(support);
    std::vector<double> all;
    CompensatedSum wsum;
    std::vector<double> weights(support);
    for (std::size_t i = 0; i < support; ++i) {
      std::vector<double> v(L);
      double s = 0.0;
      for (auto& e : v) s += (e = expo(rng));
      for (auto& e : v) e /= s;
      all.insert(all.end(), v.begin(), v.end());
      points[i].id = "x" + std::to_string(i);
      points[i].cond = ProbabilityVector::trusted(std::move(v));
      weights[i] = unif(rng);
      wsum.add(weights[i]);
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) continue;
    for (std::size_t i = 0; i < support; ++i) points[i].marginal = weights[i] / wsum.value();
    return DiscreteDistribution(num_classes, std::move(points));
  }
}

struct SampleOptions {
  /// 0 keeps the exact conditional probabilities. Larger values sharpen and
  /// jitter the logits: z' = (1 + noise) z + noise * N(0, 1), renormalised
  /// through the softmax, which makes the scores overconfident.
  double noise = 0.0;
  bool with_logits = true;
  std::string id_prefix = "s";
};

struct SyntheticSample {
  ScoreSet scores;
  /// support_index[i]: the support point sample i was drawn at.
  std::vector<std::size_t> support_index;
};

/// Draws n samples: X from the marginal, the recorded scores from p(X)
/// (optionally perturbed), Y from p(X).
inline SyntheticSample sample_scores(const DiscreteDistribution& dist, std::size_t n,
                                     std::uint64_t seed, const SampleOptions& opts = {}) {
  std::seed_seq seq{seed, std::uint64_t{0xda7a}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto L = static_cast<std::size_t>(dist.num_classes());

  std::vector<double> cdf;
  CompensatedSum acc;
  for (const auto& x : dist.points()) {
    acc.add(x.marginal);
    cdf.push_back(acc.value());
  }
  SyntheticSample out{ScoreSet(dist.num_classes()), {}};
  out.support_index.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = unif(rng) * cdf.back();
    const auto xi = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
        dist.size() - 1);
    const auto& x = dist[xi];
    const double v = unif(rng);
    double c = 0.0;
    int label = static_cast<int>(L);
    for (std::size_t l = 0; l < L; ++l) {
      c += x.cond[l];
      if (v < c) {
        label = static_cast<int>(l) + 1;
        break;
      }
    }
    std::vector<double> z;
    if (x.logits) {
      z = *x.logits;
    } else {
      for (double p : x.cond.values()) z.push_back(std::log(std::max(p, 1e-300)));
    }
    if (opts.noise > 0.0) {
      for (auto& e : z) e = (1.0 + opts.noise) * e + opts.noise * gauss(rng);
    }
    Sample sample;
    sample.id = opts.id_prefix + std::to_string(s);
    sample.probs = opts.noise > 0.0 ? softmax(z) : x.cond;
    if (opts.with_logits) sample.logits = std::move(z);
    sample.label = label;
    out.scores.add(std::move(sample));
    out.support_index.push_back(xi);
  }
  return out;
}

struct SynthResult {
  DiscreteDistribution dist;
  SyntheticSample sample;
};

/// make_distribution followed by sample_scores with the same seed.
inline SynthResult synth_generate(Template tmpl, int num_classes, std::size_t n,
                                  std::uint64_t seed, std::size_t support = 1000,
                                  const SampleOptions& opts = {}) {
  auto dist = make_distribution(tmpl, num_classes, support, seed);
  auto sample = sample_scores(dist, n, seed, opts);
  return {std::move(dist), std::move(sample)};
}

}  // namespace setvalued::oracle
