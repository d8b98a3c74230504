#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "setvalued/error.hpp"
#include "setvalued/parallel.hpp"

namespace setvalued {

/// Relative slack used when comparing a cumulative weight against a target
/// level. Cumulative sums of many 1/N weights carry rounding error of a few
/// ulps; without the slack a level such as kbar = 2 can be missed by 1e-16.
inline constexpr double kLevelSlack = 1e-12;

inline double level_slack(double u) { return kLevelSlack * std::max(1.0, std::abs(u)); }

struct Knot {
  double score = 0.0;
  double weight = 0.0;
};

/// f(t) = sum of weights of knots with score >= t. Non-increasing and
/// left-continuous; f(t) = 0 above the largest score.
///
/// Knots with equal scores are merged. Cumulative values are computed in a
/// fixed order (score descending, weight descending) with compensated
/// summation, so the function does not depend on input order.
class EmpiricalStepFunction {
 public:
  EmpiricalStepFunction() = default;

  explicit EmpiricalStepFunction(std::vector<Knot> knots) {
    std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.weight > b.weight;
    });
    CompensatedSum acc;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      acc.add(knots[i].weight);
      const bool last_of_score =
          i + 1 == knots.size() || knots[i + 1].score != knots[i].score;
      if (last_of_score) {
        scores_.push_back(knots[i].score);
        cumulative_.push_back(acc.value());
      }
    }
  }

  /// Distinct knot scores, descending.
  std::span<const double> scores() const noexcept { return scores_; }
  /// cumulative()[j] = f(scores()[j]).
  std::span<const double> cumulative() const noexcept { return cumulative_; }
  bool empty() const noexcept { return scores_.empty(); }

  double operator()(double t) const {
    // Number of distinct scores >= t.
    const auto it = std::partition_point(scores_.begin(), scores_.end(),
                                         [t](double s) { return s >= t; });
    const auto n = static_cast<std::size_t>(it - scores_.begin());
    return n == 0 ? 0.0 : cumulative_[n - 1];
  }

  /// f(0): the total weight (all scores are probabilities, hence >= 0).
  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  double max_score() const { return scores_.empty() ? 0.0 : scores_.front(); }

 private:
  std::vector<double> scores_;
  std::vector<double> cumulative_;
};

struct InverseResult {
  double value = 0.0;
  /// Even the largest knot alone leaves f above u; `value` is then the
  /// largest knot score.
  bool saturated = false;
};

/// Generalized inverse f^{-1}(u) = inf{t : f(t) <= u}, realised on the
/// knots: the smallest knot score s with f(s) <= u, or 0 when f(0) <= u.
inline InverseResult generalized_inverse(const EmpiricalStepFunction& f, double u) {
  if (!(u >= 0.0)) throw Error(ErrorKind::NegativeU, "u must be >= 0", u);
  const double bound = u + level_slack(u);
  if (f.total() <= bound) return {0.0, false};
  const auto cum = f.cumulative();
  // cum is increasing along the descending scores; find the last j with
  // cum[j] <= bound.
  const auto it = std::partition_point(cum.begin(), cum.end(),
                                       [bound](double c) { return c <= bound; });
  if (it == cum.begin()) return {f.max_score(), true};
  return {f.scores()[static_cast<std::size_t>(it - cum.begin()) - 1], false};
}

/// Largest knot score s with f(s) >= u: the highest threshold that keeps the
/// level. std::nullopt when f never reaches u.
inline std::optional<double> coverage_threshold(const EmpiricalStepFunction& f,
                                                double u) {
  const double bound = u - level_slack(u);
  if (f.empty() || f.total() < bound) return std::nullopt;
  const auto cum = f.cumulative();
  const auto it = std::partition_point(cum.begin(), cum.end(),
                                       [bound](double c) { return c < bound; });
  return f.scores()[static_cast<std::size_t>(it - cum.begin())];
}

}  // namespace setvalued
