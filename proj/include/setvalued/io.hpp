#pragma once

// Text formats.
//
// Score file (CSV, UTF-8):
//   id,label,p_1,...,p_L[,z_1,...,z_L]
// `label` may be empty for unlabeled rows. Ids may not contain commas.
// Reals are written in the shortest form that reads back to the same double.
//
// Model file: `key=value` lines starting with format_version.
// Distribution file (CSV): x_id,marginal,p_1,...,p_L[,z_1,...,z_L]
// Predictions (CSV): id,labels,size with labels joined by ';'.
// Metrics: JSON. Sweep curves and per-class tables: CSV.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "setvalued/calibration.hpp"
#include "setvalued/core.hpp"
#include "setvalued/evaluation.hpp"
#include "setvalued/formulations.hpp"
#include "setvalued/oracle.hpp"

namespace setvalued::io {

inline constexpr int kModelFormatVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'",
                static_cast<double>(line));
  }
  return v;
}

inline long long parse_int(std::string_view s, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'",
                static_cast<double>(line));
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

/// 64-bit FNV-1a digest, used to identify calibration inputs.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

namespace detail {

/// Parses a header of the form <lead...>,<prefix>1,...,<prefix>L[,z_1..z_L]
/// and returns (L, has_logits).
inline std::pair<int, bool> parse_class_header(std::string_view header,
                                               std::vector<std::string_view> lead,
                                               std::string_view prob_prefix) {
  const auto cols = split(trim_cr(header), ',');
  for (std::size_t i = 0; i < lead.size(); ++i) {
    if (i >= cols.size() || cols[i] != lead[i]) {
      throw Error(ErrorKind::ParseError,
                  "line 1: expected column '" + std::string(lead[i]) + "'", 1.0);
    }
  }
  int L = 0;
  std::size_t c = lead.size();
  while (c < cols.size() &&
         cols[c] == std::string(prob_prefix) + std::to_string(L + 1)) {
    ++L;
    ++c;
  }
  int Z = 0;
  while (c < cols.size() && cols[c] == "z_" + std::to_string(Z + 1)) {
    ++Z;
    ++c;
  }
  if (c != cols.size()) {
    throw Error(ErrorKind::ParseError,
                "line 1: unexpected column '" + std::string(cols[c]) + "'", 1.0);
  }
  if (L < 2) throw Error(ErrorKind::TooFewClasses, "header declares fewer than 2 classes");
  if (Z != 0 && Z != L) {
    throw Error(ErrorKind::ParseError, "line 1: logit columns must match the class count",
                1.0);
  }
  return {L, Z == L};
}

inline std::vector<double> parse_reals(const std::vector<std::string_view>& cols,
                                       std::size_t from, std::size_t count,
                                       std::size_t line) {
  std::vector<double> v;
  v.reserve(count);
  for (std::size_t i = 0; i < count; ++i) v.push_back(parse_double(cols[from + i], line));
  return v;
}

template <typename RowFn>
void for_each_row(std::string_view text, RowFn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim_cr(text.substr(start, end - start));
    ++line_no;
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Score files

inline ScoreSet parse_scores(std::string_view text, double tol = kDefaultSumTolerance) {
  const auto eol = text.find('\n');
  const auto header = text.substr(0, eol);
  const auto [L, has_logits] = detail::parse_class_header(header, {"id", "label"}, "p_");
  const auto expected = 2 + static_cast<std::size_t>(L) * (has_logits ? 2 : 1);
  ScoreSet scores(L);
  detail::for_each_row(text, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1) return;
    const auto cols = split(line, ',');
    if (cols.size() != expected) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " columns, got " +
                      std::to_string(cols.size()),
                  static_cast<double>(line_no));
    }
    Sample s;
    s.id = std::string(cols[0]);
    if (!cols[1].empty()) s.label = static_cast<int>(parse_int(cols[1], line_no));
    try {
      s.probs = validate_probability_vector(
          detail::parse_reals(cols, 2, static_cast<std::size_t>(L), line_no), tol);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.message(), e.value());
    }
    if (has_logits) {
      s.logits = detail::parse_reals(cols, 2 + static_cast<std::size_t>(L),
                                     static_cast<std::size_t>(L), line_no);
    }
    try {
      scores.add(std::move(s));
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.message(), e.value());
    }
  });
  return scores;
}

inline std::string format_scores(const ScoreSet& scores, bool with_logits = true) {
  const int L = scores.num_classes();
  const bool logits = with_logits && !scores.empty() && scores.all_have_logits();
  std::string out = "id,label";
  for (int l = 1; l <= L; ++l) out += ",p_" + std::to_string(l);
  if (logits) {
    for (int l = 1; l <= L; ++l) out += ",z_" + std::to_string(l);
  }
  out += '\n';
  for (const auto& s : scores.samples()) {
    out += s.id;
    out += ',';
    if (s.label) out += std::to_string(*s.label);
    for (double p : s.probs.values()) {
      out += ',';
      out += format_double(p);
    }
    if (logits) {
      for (double z : *s.logits) {
        out += ',';
        out += format_double(z);
      }
    }
    out += '\n';
  }
  return out;
}

inline ScoreSet read_scores(const std::string& path, double tol = kDefaultSumTolerance) {
  return parse_scores(read_file(path), tol);
}

inline void write_scores(const std::string& path, const ScoreSet& scores) {
  write_file(path, format_scores(scores));
}

// ---------------------------------------------------------------------------
// Model files

inline std::string format_model(const CalibratedClassifier& c) {
  using namespace formulation;
  std::ostringstream out;
  out << "format_version=" << kModelFormatVersion << '\n';
  out << "formulation=" << formulation_name(c.spec.kind) << '\n';
  out << "num_classes=" << c.num_classes << '\n';
  out << "tie_break=ascending-label-index\n";
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TopK>) {
          out << "k=" << f.k << '\n';
        } else if constexpr (std::is_same_v<T, PointwiseError>) {
          out << "eps=" << format_double(f.eps) << '\n';
          out << "offset_policy=" << (f.auto_offset ? "auto" : "fixed") << '\n';
        } else if constexpr (std::is_same_v<T, Penalized>) {
          out << "lambda=" << format_double(f.lambda) << '\n';
        } else if constexpr (std::is_same_v<T, AverageSize>) {
          out << "kbar=" << format_double(f.kbar) << '\n';
        } else if constexpr (std::is_same_v<T, AverageError>) {
          out << "ebar=" << format_double(f.ebar) << '\n';
        } else if constexpr (std::is_same_v<T, HybridSize>) {
          out << "kbar=" << format_double(f.kbar) << '\n';
          out << "k=" << f.k << '\n';
        } else if constexpr (std::is_same_v<T, HybridError>) {
          out << "ebar=" << format_double(f.ebar) << '\n';
          out << "eps=" << format_double(f.eps) << '\n';
          out << "mode=" << to_string(f.mode) << '\n';
        } else {
          out << "beta=" << format_double(f.beta) << '\n';
        }
      },
      c.spec.kind);
  if (c.theta) out << "theta=" << format_double(*c.theta) << '\n';
  out << "temperature=" << format_double(c.temperature) << '\n';
  out << "offset=" << format_double(c.offset) << '\n';
  out << "calibration_set_size=" << c.provenance.calibration_set_size << '\n';
  out << "seed=" << c.provenance.seed << '\n';
  out << "fitted_at=" << c.provenance.fitted_at << '\n';
  out << "temperature_at_boundary="
      << (c.provenance.temperature_at_boundary ? "true" : "false") << '\n';
  if (c.provenance.offset_n) out << "offset_n=" << *c.provenance.offset_n << '\n';
  return out.str();
}

inline CalibratedClassifier parse_model(std::string_view text) {
  using namespace formulation;
  std::map<std::string, std::string, std::less<>> kv;
  detail::for_each_row(text, [&](std::string_view line, std::size_t line_no) {
    if (line.front() == '#') return;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError,
                  "model line " + std::to_string(line_no) + ": expected key=value",
                  static_cast<double>(line_no));
    }
    kv[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  });
  const auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw Error(ErrorKind::ParseError, "model file lacks '" + std::string(key) + "'");
    }
    return it->second;
  };
  const auto num = [&](std::string_view key) { return parse_double(get(key), 0); };
  const auto integer = [&](std::string_view key) {
    return static_cast<int>(parse_int(get(key), 0));
  };
  if (integer("format_version") != kModelFormatVersion) {
    throw Error(ErrorKind::ParseError, "unsupported model format_version " +
                                           get("format_version"));
  }
  CalibratedClassifier c;
  c.num_classes = integer("num_classes");
  const auto& name = get("formulation");
  if (name == "top-k") {
    c.spec.kind = TopK{integer("k")};
  } else if (name == "pointwise-error") {
    c.spec.kind = PointwiseError{num("eps"), num("offset"), get("offset_policy") == "auto"};
  } else if (name == "penalized") {
    c.spec.kind = Penalized{num("lambda")};
  } else if (name == "average-size") {
    c.spec.kind = AverageSize{num("kbar")};
  } else if (name == "average-error") {
    c.spec.kind = AverageError{num("ebar")};
  } else if (name == "hybrid-size") {
    c.spec.kind = HybridSize{num("kbar"), integer("k")};
  } else if (name == "hybrid-error") {
    const auto& mode = get("mode");
    if (mode != "lemma-threshold" && mode != "union-with-pointwise") {
      throw Error(ErrorKind::ParseError, "unknown hybrid error mode '" + mode + "'");
    }
    c.spec.kind = HybridError{num("ebar"), num("eps"),
                              mode == "lemma-threshold" ? HybridErrorMode::LemmaThreshold
                                                        : HybridErrorMode::UnionWithPointwise};
  } else if (name == "fscore") {
    c.spec.kind = FScore{num("beta")};
  } else {
    throw Error(ErrorKind::ParseError, "unknown formulation '" + name + "'");
  }
  if (get("tie_break") != "ascending-label-index") {
    throw Error(ErrorKind::ParseError, "unsupported tie_break '" + get("tie_break") + "'");
  }
  if (kv.contains("theta")) c.theta = num("theta");
  if (needs_threshold(c.spec.kind) && !c.theta) {
    throw Error(ErrorKind::ParseError, "model of this formulation needs a theta");
  }
  c.temperature = num("temperature");
  c.offset = num("offset");
  c.provenance.calibration_set_size =
      static_cast<std::size_t>(parse_int(get("calibration_set_size"), 0));
  c.provenance.seed = static_cast<std::uint64_t>(parse_int(get("seed"), 0));
  c.provenance.fitted_at = get("fitted_at");
  c.provenance.temperature_at_boundary = get("temperature_at_boundary") == "true";
  if (kv.contains("offset_n")) {
    c.provenance.offset_n = static_cast<std::size_t>(parse_int(get("offset_n"), 0));
  }
  if (auto* pw = std::get_if<PointwiseError>(&c.spec.kind); pw && !pw->auto_offset) {
    pw->offset = c.offset;
  }
  validate_spec(c.spec, c.num_classes);
  return c;
}

// ---------------------------------------------------------------------------
// Distribution files

inline std::string format_distribution(const oracle::DiscreteDistribution& dist) {
  const int L = dist.num_classes();
  const bool logits = std::all_of(dist.points().begin(), dist.points().end(),
                                  [](const auto& p) { return p.logits.has_value(); });
  std::string out = "x_id,marginal";
  for (int l = 1; l <= L; ++l) out += ",p_" + std::to_string(l);
  if (logits) {
    for (int l = 1; l <= L; ++l) out += ",z_" + std::to_string(l);
  }
  out += '\n';
  for (const auto& x : dist.points()) {
    out += x.id + ',' + format_double(x.marginal);
    for (double p : x.cond.values()) out += ',' + format_double(p);
    if (logits) {
      for (double z : *x.logits) out += ',' + format_double(z);
    }
    out += '\n';
  }
  return out;
}

inline oracle::DiscreteDistribution parse_distribution(std::string_view text) {
  const auto header = text.substr(0, text.find('\n'));
  const auto [L, has_logits] = detail::parse_class_header(header, {"x_id", "marginal"}, "p_");
  const auto expected = 2 + static_cast<std::size_t>(L) * (has_logits ? 2 : 1);
  std::vector<oracle::SupportPoint> points;
  detail::for_each_row(text, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1) return;
    const auto cols = split(line, ',');
    if (cols.size() != expected) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": wrong column count",
                  static_cast<double>(line_no));
    }
    oracle::SupportPoint p;
    p.id = std::string(cols[0]);
    p.marginal = parse_double(cols[1], line_no);
    p.cond = validate_probability_vector(
        detail::parse_reals(cols, 2, static_cast<std::size_t>(L), line_no));
    if (has_logits) {
      p.logits = detail::parse_reals(cols, 2 + static_cast<std::size_t>(L),
                                     static_cast<std::size_t>(L), line_no);
    }
    points.push_back(std::move(p));
  });
  return oracle::DiscreteDistribution(L, std::move(points));
}

// ---------------------------------------------------------------------------
// Predictions, metrics, curves

inline std::string format_predictions(const ScoreSet& scores,
                                      const std::vector<LabelSet>& sets) {
  std::string out = "id,labels,size\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += scores[i].id;
    out += ',';
    bool first = true;
    for (int l : sets[i].labels()) {
      if (!first) out += ';';
      out += std::to_string(l);
      first = false;
    }
    out += ',';
    out += std::to_string(sets[i].size());
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["n_samples"] = r.n_samples;
  j["avg_error"] = r.avg_error;
  j["avg_size"] = r.avg_size;
  j["recall"] = r.recall;
  j["precision"] = r.precision ? nlohmann::ordered_json(*r.precision) : nullptr;
  j["beta"] = r.beta;
  j["f_beta"] = r.f_beta;
  j["empty_set_rate"] = r.empty_set_rate;
  auto& per_class = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& [label, err] : r.per_class_error) {
    per_class.push_back({{"label", label},
                         {"support", r.per_class_support.at(label)},
                         {"error", err},
                         {"avg_size", r.per_class_avg_size.at(label)}});
  }
  return j;
}

inline std::string format_per_class_table(const MetricsReport& r) {
  std::string out = "label,support,error,avg_size\n";
  for (const auto& [label, err] : r.per_class_error) {
    out += std::to_string(label) + ',' + std::to_string(r.per_class_support.at(label)) + ',' +
           format_double(err) + ',' + format_double(r.per_class_avg_size.at(label)) + '\n';
  }
  return out;
}

inline std::string format_curve(const SweepCurve& curve) {
  std::string out =
      "param,status,mean_error,std_error,mean_size,std_size,q10,q25,q50,q75,q90,message\n";
  for (const auto& p : curve.points) {
    out += format_double(p.param) + ',' + (p.ok ? "ok" : "failed") + ',';
    if (p.ok) {
      out += format_double(p.mean_error) + ',' + format_double(p.std_error) + ',' +
             format_double(p.mean_size) + ',' + format_double(p.std_size);
    } else {
      out += ",,,";
    }
    for (int pct : kViolationPercentiles) {
      out += ',';
      if (p.violation_quantiles) out += format_double(p.violation_quantiles->at(pct));
    }
    out += ',';
    // Messages may contain commas; keep the column count fixed.
    std::string msg = p.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    out += msg + '\n';
  }
  return out;
}

}  // namespace setvalued::io
