#pragma once

// Domain types and the two primitive set constructors (top-k and
// thresholding) that every prediction rule is built from.
//
// Labels are 1-based at every public boundary: a problem with L classes has
// labels {1, ..., L}. Probability vectors are indexed 0-based internally.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "setvalued/error.hpp"

namespace setvalued {

inline constexpr double kDefaultSumTolerance = 1e-6;

/// The single supported tie-break mode: among equal probabilities the
/// smaller label wins. Recorded explicitly so model files are unambiguous.
enum class TieBreakPolicy { AscendingLabelIndex };

/// Conditional class probabilities p(x) for one sample.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  /// Validates `raw`; see validate_probability_vector.
  static ProbabilityVector validated(std::vector<double> raw,
                                     double tol = kDefaultSumTolerance);

  /// Wraps values that are valid by construction (softmax output, oracle
  /// fixtures that were already validated).
  static ProbabilityVector trusted(std::vector<double> values) {
    ProbabilityVector p;
    p.values_ = std::move(values);
    return p;
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const ProbabilityVector&,
                         const ProbabilityVector&) = default;

 private:
  std::vector<double> values_;
};

inline ProbabilityVector validate_probability_vector(std::span<const double> raw,
                                                     double tol = kDefaultSumTolerance) {
  if (raw.size() < 2) {
    throw Error(ErrorKind::TooFewClasses,
                "a probability vector needs at least 2 classes, got " +
                    std::to_string(raw.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // Written as !(x >= 0) so NaN is rejected too.
    if (!(raw[i] >= 0.0)) {
      throw Error(ErrorKind::NegativeEntry,
                  "entry " + std::to_string(i + 1) + " is negative or NaN",
                  raw[i]);
    }
    sum += raw[i];
  }
  if (!(std::abs(sum - 1.0) <= tol)) {
    throw Error(ErrorKind::SumOutOfTolerance,
                "entries sum to " + std::to_string(sum), sum);
  }
  return ProbabilityVector::trusted(std::vector<double>(raw.begin(), raw.end()));
}

inline ProbabilityVector ProbabilityVector::validated(std::vector<double> raw,
                                                      double tol) {
  return validate_probability_vector(raw, tol);
}

/// softmax(logits / temperature), computed with the max-shift trick.
inline ProbabilityVector softmax(std::span<const double> logits,
                                 double temperature = 1.0) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return ProbabilityVector::trusted(std::move(out));
  double max_z = logits[0] / temperature;
  for (double z : logits) max_z = std::max(max_z, z / temperature);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / temperature - max_z);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return ProbabilityVector::trusted(std::move(out));
}

/// A predicted label set: distinct 1-based labels in ascending order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(int num_classes) : num_classes_(num_classes) {}

  /// Builds from 0-based class indices in any order.
  static LabelSet from_indices(int num_classes, std::vector<int> indices) {
    LabelSet s(num_classes);
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    s.labels_.reserve(indices.size());
    for (int i : indices) s.labels_.push_back(i + 1);
    return s;
  }

  /// Builds from 1-based labels; throws LabelOutOfRange for labels outside [1, L].
  static LabelSet from_labels(int num_classes, std::vector<int> labels) {
    for (int l : labels) {
      if (l < 1 || l > num_classes) {
        throw Error(ErrorKind::LabelOutOfRange,
                    "label " + std::to_string(l) + " outside [1, " +
                        std::to_string(num_classes) + "]");
      }
    }
    for (int& l : labels) --l;
    return from_indices(num_classes, std::move(labels));
  }

  /// Bit (l - 1) of `mask` set means label l is included.
  static LabelSet from_mask(int num_classes, std::uint64_t mask) {
    LabelSet s(num_classes);
    for (int i = 0; i < num_classes; ++i) {
      if (mask >> i & 1U) s.labels_.push_back(i + 1);
    }
    return s;
  }

  std::span<const int> labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  int num_classes() const noexcept { return num_classes_; }

  bool contains(int label) const {
    return std::binary_search(labels_.begin(), labels_.end(), label);
  }

  bool is_subset_of(const LabelSet& other) const {
    return std::includes(other.labels_.begin(), other.labels_.end(),
                         labels_.begin(), labels_.end());
  }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (int l : labels_) m |= std::uint64_t{1} << (l - 1);
    return m;
  }

  /// Sum of p over the included labels.
  double mass(const ProbabilityVector& p) const {
    double total = 0.0;
    for (int l : labels_) total += p[static_cast<std::size_t>(l - 1)];
    return total;
  }

  friend LabelSet set_union(const LabelSet& a, const LabelSet& b) {
    LabelSet out(std::max(a.num_classes_, b.num_classes_));
    std::set_union(a.labels_.begin(), a.labels_.end(), b.labels_.begin(),
                   b.labels_.end(), std::back_inserter(out.labels_));
    return out;
  }

  friend LabelSet set_intersection(const LabelSet& a, const LabelSet& b) {
    LabelSet out(std::max(a.num_classes_, b.num_classes_));
    std::set_intersection(a.labels_.begin(), a.labels_.end(), b.labels_.begin(),
                          b.labels_.end(), std::back_inserter(out.labels_));
    return out;
  }

  friend bool operator==(const LabelSet& a, const LabelSet& b) {
    return a.labels_ == b.labels_;
  }

 private:
  int num_classes_ = 0;
  std::vector<int> labels_;
};

/// 0-based class indices sorted by decreasing probability, ties broken by
/// ascending index.
inline std::vector<int> descending_order(const ProbabilityVector& p) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return p[a] > p[b]; });
  return order;
}

/// The k labels with the largest probabilities.
inline LabelSet top_indices(const ProbabilityVector& p, int k,
                            TieBreakPolicy = TieBreakPolicy::AscendingLabelIndex) {
  const int num_classes = static_cast<int>(p.size());
  if (k < 0 || k > num_classes) {
    throw Error(ErrorKind::KOutOfRange,
                "k = " + std::to_string(k) + " outside [0, " +
                    std::to_string(num_classes) + "]",
                k);
  }
  auto order = descending_order(p);
  order.resize(static_cast<std::size_t>(k));
  return LabelSet::from_indices(num_classes, std::move(order));
}

/// { l : p_l >= theta }. theta above 1 yields the empty set.
inline LabelSet threshold_set(const ProbabilityVector& p, double theta) {
  std::vector<int> kept;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= theta) kept.push_back(static_cast<int>(i));
  }
  return LabelSet::from_indices(static_cast<int>(p.size()), std::move(kept));
}

struct Sample {
  std::string id;
  ProbabilityVector probs;
  std::optional<std::vector<double>> logits;
  std::optional<int> label;  // 1-based
};

/// A collection of scored samples sharing one class count. When samples
/// carry logits, `temperature` is the T with probs == softmax(logits / T).
class ScoreSet {
 public:
  ScoreSet() = default;
  explicit ScoreSet(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 2) {
      throw Error(ErrorKind::TooFewClasses, "a score set needs L >= 2");
    }
  }

  void add(Sample s) {
    if (static_cast<int>(s.probs.size()) != num_classes_) {
      throw Error(ErrorKind::ClassCountMismatch,
                  "sample '" + s.id + "' has " + std::to_string(s.probs.size()) +
                      " classes, expected " + std::to_string(num_classes_));
    }
    if (s.logits && static_cast<int>(s.logits->size()) != num_classes_) {
      throw Error(ErrorKind::ClassCountMismatch,
                  "sample '" + s.id + "' has a logit vector of the wrong length");
    }
    if (s.label && (*s.label < 1 || *s.label > num_classes_)) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "sample '" + s.id + "' has label " + std::to_string(*s.label));
    }
    samples_.push_back(std::move(s));
  }

  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const Sample> samples() const noexcept { return samples_; }

  double temperature() const noexcept { return temperature_; }
  void set_temperature(double t) { temperature_ = t; }

  bool all_labeled() const {
    return std::all_of(samples_.begin(), samples_.end(),
                       [](const Sample& s) { return s.label.has_value(); });
  }
  bool all_have_logits() const {
    return std::all_of(samples_.begin(), samples_.end(),
                       [](const Sample& s) { return s.logits.has_value(); });
  }

  void require_labels(std::string_view what) const {
    if (!all_labeled()) {
      throw Error(ErrorKind::MissingLabels,
                  std::string(what) + " needs every sample to carry a label");
    }
  }
  void require_nonempty(std::string_view what) const {
    if (empty()) {
      throw Error(ErrorKind::EmptyScoreSet, std::string(what) + " got no samples");
    }
  }

  /// Copy with probabilities recomputed as softmax(logits / t).
  ScoreSet rescaled(double t) const {
    if (!all_have_logits()) {
      throw Error(ErrorKind::MissingLogits,
                  "temperature scaling needs logits on every sample");
    }
    ScoreSet out(num_classes_);
    out.temperature_ = t;
    out.samples_.reserve(samples_.size());
    for (const auto& s : samples_) {
      Sample c = s;
      c.probs = softmax(*s.logits, t);
      out.samples_.push_back(std::move(c));
    }
    return out;
  }

 private:
  int num_classes_ = 0;
  double temperature_ = 1.0;
  std::vector<Sample> samples_;
};

}  // namespace setvalued
