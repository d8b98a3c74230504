#pragma once

// Command-line front end. `run` parses arguments and executes one command,
// writing to the given streams; main() in setvalued_cli.cpp is a thin
// wrapper so tests can drive commands in-process.
//
// Exit status: 0 success, 1 library error, 2 usage error, 3 a gate failed
// (constraint violated in `evaluate`, failed check in `oracle-check`).

#include <charconv>
#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "setvalued/setvalued.hpp"

namespace setvalued::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitGate = 3;

struct FormulationFlags {
  std::string formulation;
  std::optional<int> k;
  std::optional<double> eps;
  std::optional<double> ebar;
  std::optional<double> kbar;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::string offset = "0";
  std::string mode = "lemma-threshold";
};

inline void add_formulation_flags(CLI::App* cmd, FormulationFlags& f) {
  cmd->add_option("--formulation", f.formulation,
                  "top-k, pointwise-error, penalized, average-size, average-error, "
                  "hybrid-size, hybrid-error or fscore")
      ->required();
  cmd->add_option("--k", f.k, "set size (top-k) or size cap (hybrid-size)");
  cmd->add_option("--eps", f.eps, "point-wise error level");
  cmd->add_option("--ebar", f.ebar, "average error budget");
  cmd->add_option("--kbar", f.kbar, "average size budget");
  cmd->add_option("--lambda", f.lambda, "size penalty");
  cmd->add_option("--beta", f.beta, "F-score beta");
  cmd->add_option("--offset", f.offset, "point-wise offset: auto or a value")
      ->capture_default_str();
  cmd->add_option("--mode", f.mode, "hybrid error mode: lemma-threshold or union-with-pointwise")
      ->capture_default_str();
}

inline double parse_number(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::UsageError, what + ": '" + s + "' is not a number");
  }
  return v;
}

/// Builds the spec from flags. When `swept` is set, that parameter may be
/// missing (the sweep grid supplies it) and a placeholder is used.
inline FormulationSpec build_spec(const FormulationFlags& f, bool swept = false) {
  using namespace formulation;
  const auto need = [&](const auto& opt, const char* flag) {
    if (opt) return *opt;
    if (swept) return std::decay_t<decltype(*opt)>{};
    throw Error(ErrorKind::UsageError, f.formulation + " needs " + flag);
  };
  FormulationSpec spec;
  if (f.formulation == "top-k") {
    spec.kind = TopK{need(f.k, "--k")};
  } else if (f.formulation == "pointwise-error") {
    PointwiseError p{need(f.eps, "--eps")};
    if (f.offset == "auto") {
      p.auto_offset = true;
    } else {
      p.offset = parse_number(f.offset, "--offset");
    }
    spec.kind = p;
  } else if (f.formulation == "penalized") {
    spec.kind = Penalized{need(f.lambda, "--lambda")};
  } else if (f.formulation == "average-size") {
    spec.kind = AverageSize{need(f.kbar, "--kbar")};
  } else if (f.formulation == "average-error") {
    spec.kind = AverageError{need(f.ebar, "--ebar")};
  } else if (f.formulation == "hybrid-size") {
    if (!f.k) throw Error(ErrorKind::UsageError, "hybrid-size needs --k");
    spec.kind = HybridSize{need(f.kbar, "--kbar"), *f.k};
  } else if (f.formulation == "hybrid-error") {
    if (!f.eps) throw Error(ErrorKind::UsageError, "hybrid-error needs --eps");
    HybridErrorMode mode;
    if (f.mode == "lemma-threshold") {
      mode = HybridErrorMode::LemmaThreshold;
    } else if (f.mode == "union-with-pointwise") {
      mode = HybridErrorMode::UnionWithPointwise;
    } else {
      throw Error(ErrorKind::UsageError, "unknown --mode '" + f.mode + "'");
    }
    spec.kind = HybridError{need(f.ebar, "--ebar"), *f.eps, mode};
  } else if (f.formulation == "fscore") {
    spec.kind = FScore{need(f.beta, "--beta")};
  } else {
    throw Error(ErrorKind::UsageError, "unknown formulation '" + f.formulation + "'");
  }
  return spec;
}

inline std::optional<double> parse_temperature(const std::string& s) {
  if (s == "fit") return std::nullopt;
  return parse_number(s, "--temperature");
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (auto part : io::split(s, ',')) out.push_back(parse_number(std::string(part), what));
  return out;
}

inline void check_threads(unsigned threads) {
  if (threads < 1) throw Error(ErrorKind::UsageError, "--threads must be >= 1");
}

inline void print_metrics_line(std::ostream& out, const std::string& prefix,
                               const MetricsReport& r) {
  out << prefix << "avg_size=" << io::format_double(r.avg_size) << '\n';
  out << prefix << "avg_error=" << io::format_double(r.avg_error) << '\n';
}

// ---------------------------------------------------------------------------

struct CalibrateConfig {
  FormulationFlags formulation;
  std::string scores;
  std::string out;
  std::string temperature = "1";
  std::optional<double> tol;
  double sum_tol = kDefaultSumTolerance;
  std::uint64_t seed = 0;
  std::optional<int> feasibility_k;
  unsigned threads = 1;
};

inline int cmd_calibrate(const CalibrateConfig& cfg, std::ostream& out) {
  check_threads(cfg.threads);
  const auto spec = build_spec(cfg.formulation);
  const auto text = io::read_file(cfg.scores);
  const auto scores = io::parse_scores(text, cfg.sum_tol);
  validate_spec(spec, scores.num_classes());

  CalibrationOptions opts;
  opts.temperature = parse_temperature(cfg.temperature);
  if (cfg.tol) {
    opts.temperature_tol = *cfg.tol;
    opts.fscore_tol = *cfg.tol;
  }
  opts.seed = cfg.seed;
  opts.fitted_at = "fnv1a64:" + io::hex64(io::fnv1a64(text));
  opts.threads = cfg.threads;

  if (cfg.feasibility_k) {
    const auto* ae = std::get_if<formulation::AverageError>(&spec.kind);
    if (!ae) {
      throw Error(ErrorKind::UsageError, "--feasibility-k applies to average-error only");
    }
    const auto f = feasibility_check(scores, *cfg.feasibility_k, ae->ebar);
    out << "eps_k=" << io::format_double(f.eps_k) << '\n';
    out << "feasible=" << (f.feasible ? "true" : "false") << '\n';
    if (!f.feasible) {
      throw Error(ErrorKind::InfeasiblePair,
                  "ebar is below the top-" + std::to_string(*cfg.feasibility_k) +
                      " error " + io::format_double(f.eps_k),
                  f.eps_k);
    }
  }

  const auto classifier = calibrate(spec, scores, opts);
  io::write_file(cfg.out, io::format_model(classifier));

  out << "formulation=" << formulation_name(spec.kind) << '\n';
  if (classifier.theta) out << "theta=" << io::format_double(*classifier.theta) << '\n';
  out << "temperature=" << io::format_double(classifier.temperature) << '\n';
  if (classifier.provenance.temperature_at_boundary) {
    out << "warning: fitted temperature at the search boundary\n";
  }
  out << "offset=" << io::format_double(classifier.offset) << '\n';
  // Self-consistency on the calibration set itself.
  const auto sets = predict_all(classifier, scores, cfg.threads);
  if (scores.all_labeled() && !scores.empty()) {
    print_metrics_line(out, "calibration_", evaluate_predictions(sets, scores));
  } else {
    std::size_t total = 0;
    for (const auto& s : sets) total += s.size();
    out << "calibration_avg_size="
        << io::format_double(scores.empty() ? 0.0
                                            : static_cast<double>(total) /
                                                  static_cast<double>(scores.size()))
        << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictConfig {
  std::string model;
  std::string scores;
  std::string out;
  double sum_tol = kDefaultSumTolerance;
  unsigned threads = 1;
};

inline CalibratedClassifier load_model_for(const std::string& path, const ScoreSet& scores) {
  auto classifier = io::parse_model(io::read_file(path));
  if (classifier.num_classes != scores.num_classes()) {
    throw Error(ErrorKind::ClassCountMismatch,
                "model has L = " + std::to_string(classifier.num_classes) +
                    ", scores have L = " + std::to_string(scores.num_classes()));
  }
  return classifier;
}

inline int cmd_predict(const PredictConfig& cfg, std::ostream& out) {
  check_threads(cfg.threads);
  const auto scores = io::read_scores(cfg.scores, cfg.sum_tol);
  const auto classifier = load_model_for(cfg.model, scores);
  const auto text = io::format_predictions(scores, predict_all(classifier, scores, cfg.threads));
  if (cfg.out.empty()) {
    out << text;
  } else {
    io::write_file(cfg.out, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateConfig {
  std::string model;
  std::string scores;
  std::string out;
  std::string per_class;
  double beta = 1.0;
  std::optional<double> violation_eps;
  std::optional<double> max_avg_error;
  std::optional<double> max_avg_size;
  double slack = 0.0;
  double sum_tol = kDefaultSumTolerance;
  unsigned threads = 1;
};

inline int cmd_evaluate(const EvaluateConfig& cfg, std::ostream& out, std::ostream& err) {
  check_threads(cfg.threads);
  const auto scores = io::read_scores(cfg.scores, cfg.sum_tol);
  scores.require_labels("evaluate");
  const auto classifier = load_model_for(cfg.model, scores);
  const auto report = evaluate(classifier, scores, cfg.beta, cfg.threads);
  auto json = io::to_json(report);
  if (cfg.violation_eps) {
    const auto v = violation_from_class_error(report.per_class_error, *cfg.violation_eps);
    auto& j = json["violation"];
    j["eps"] = v.eps;
    j["violating_fraction"] = v.violating_fraction;
    for (const auto& [pct, q] : v.quantiles) j["quantiles"]["q" + std::to_string(pct)] = q;
  }
  const auto text = json.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << text;
  } else {
    io::write_file(cfg.out, text);
  }
  if (!cfg.per_class.empty()) io::write_file(cfg.per_class, io::format_per_class_table(report));

  int status = kExitOk;
  if (cfg.max_avg_error && report.avg_error > *cfg.max_avg_error + cfg.slack) {
    err << "constraint violated: avg_error " << io::format_double(report.avg_error)
        << " > " << io::format_double(*cfg.max_avg_error) << " + slack "
        << io::format_double(cfg.slack) << '\n';
    status = kExitGate;
  }
  if (cfg.max_avg_size && report.avg_size > *cfg.max_avg_size + cfg.slack) {
    err << "constraint violated: avg_size " << io::format_double(report.avg_size) << " > "
        << io::format_double(*cfg.max_avg_size) << " + slack "
        << io::format_double(cfg.slack) << '\n';
    status = kExitGate;
  }
  return status;
}

// ---------------------------------------------------------------------------

struct SweepConfig {
  FormulationFlags formulation;
  std::string grid;
  std::string calib;
  std::string test;
  std::string out;
  std::string temperature = "1";
  int repeats = 10;
  std::uint64_t seed = 0;
  bool no_bootstrap = false;
  bool class_quantiles = false;
  double sum_tol = kDefaultSumTolerance;
  unsigned threads = 1;
};

inline int cmd_sweep(const SweepConfig& cfg, std::ostream& out) {
  check_threads(cfg.threads);
  const auto grid = parse_list(cfg.grid, "--grid");
  if (grid.empty()) throw Error(ErrorKind::UsageError, "--grid is empty");
  const auto family = build_spec(cfg.formulation, true);
  const auto calib = io::read_scores(cfg.calib, cfg.sum_tol);
  const auto test = io::read_scores(cfg.test, cfg.sum_tol);
  if (calib.num_classes() != test.num_classes()) {
    throw Error(ErrorKind::ClassCountMismatch, "calibration and test class counts differ");
  }
  SweepOptions opts;
  opts.repeats = cfg.repeats;
  opts.seed = cfg.seed;
  opts.bootstrap = !cfg.no_bootstrap;
  opts.class_quantiles = cfg.class_quantiles;
  opts.calibration.temperature = parse_temperature(cfg.temperature);
  opts.calibration.seed = cfg.seed;
  opts.threads = cfg.threads;
  const auto curve = sweep(family, grid, calib, test, opts);
  const auto text = io::format_curve(curve);
  if (cfg.out.empty()) {
    out << text;
  } else {
    io::write_file(cfg.out, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthConfig {
  std::string tmpl = "two-regime";
  int num_classes = 10;
  std::size_t n = 1000;
  std::size_t support = 1000;
  std::uint64_t seed = 0;
  std::string split = "0.6,0.2,0.2";
  double noise = 0.0;
  bool no_logits = false;
  std::string out_prefix;
};

/// Train/calibration/test sizes from fractions summing to 1 or counts
/// summing to n. Rounding remainders go to the last split.
inline std::vector<std::size_t> split_sizes(const std::vector<double>& parts, std::size_t n) {
  if (parts.size() != 3) {
    throw Error(ErrorKind::UsageError, "--split needs three values: train,calib,test");
  }
  double sum = 0.0;
  for (double p : parts) {
    if (!(p >= 0.0)) throw Error(ErrorKind::UsageError, "--split values must be >= 0");
    sum += p;
  }
  std::vector<std::size_t> sizes(3);
  if (std::abs(sum - 1.0) <= 1e-9) {
    sizes[0] = static_cast<std::size_t>(std::floor(parts[0] * static_cast<double>(n)));
    sizes[1] = static_cast<std::size_t>(std::floor(parts[1] * static_cast<double>(n)));
    sizes[1] = std::min(sizes[1], n - sizes[0]);
  } else if (sum == static_cast<double>(n)) {
    sizes[0] = static_cast<std::size_t>(parts[0]);
    sizes[1] = static_cast<std::size_t>(parts[1]);
  } else {
    throw Error(ErrorKind::UsageError, "--split must be fractions summing to 1 or counts summing to n");
  }
  sizes[2] = n - sizes[0] - sizes[1];
  return sizes;
}

inline int cmd_synth(const SynthConfig& cfg, std::ostream& out) {
  if (cfg.out_prefix.empty()) throw Error(ErrorKind::UsageError, "--out-prefix is required");
  if (cfg.n < 1) throw Error(ErrorKind::UsageError, "--n must be >= 1");
  if (!(cfg.noise >= 0.0)) throw Error(ErrorKind::UsageError, "--noise must be >= 0");
  const auto tmpl = oracle::parse_template(cfg.tmpl);
  const auto sizes = split_sizes(parse_list(cfg.split, "--split"), cfg.n);
  oracle::SampleOptions sopts;
  sopts.noise = cfg.noise;
  sopts.with_logits = !cfg.no_logits;
  const auto synth =
      oracle::synth_generate(tmpl, cfg.num_classes, cfg.n, cfg.seed, cfg.support, sopts);
  const auto& all = synth.sample.scores;

  const char* names[] = {"train", "calib", "test"};
  std::size_t start = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    ScoreSet subset(all.num_classes());
    for (std::size_t i = start; i < start + sizes[part]; ++i) subset.add(all[i]);
    start += sizes[part];
    const auto path = cfg.out_prefix + names[part] + ".csv";
    io::write_scores(path, subset);
    out << names[part] << '=' << path << " n=" << subset.size() << '\n';
  }
  io::write_file(cfg.out_prefix + "dist.csv", io::format_distribution(synth.dist));
  std::string truth = "id,x_id\n";
  for (std::size_t i = 0; i < all.size(); ++i) {
    truth += all[i].id + ',' + synth.dist[synth.sample.support_index[i]].id + '\n';
  }
  io::write_file(cfg.out_prefix + "truth.csv", truth);
  out << "dist=" << cfg.out_prefix << "dist.csv\n";
  out << "truth=" << cfg.out_prefix << "truth.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleCheckConfig {
  std::string fixture;
  int random = 0;
  int num_classes = 3;
  std::size_t support = 2;
  std::uint64_t seed = 0;
  std::string eps = "0.05,0.2,0.5";
  std::string lambdas = "0.1,0.25,0.5";
  double hybrid_ebar = 0.1;
  double hybrid_eps = 0.3;
};

inline int cmd_oracle_check(const OracleCheckConfig& cfg, std::ostream& out) {
  std::vector<std::pair<std::string, oracle::DiscreteDistribution>> dists;
  if (!cfg.fixture.empty()) {
    dists.emplace_back(cfg.fixture, io::parse_distribution(io::read_file(cfg.fixture)));
  }
  if (cfg.random > 0) {
    std::seed_seq seq{cfg.seed};
    std::mt19937_64 rng(seq);
    for (int i = 0; i < cfg.random; ++i) {
      dists.emplace_back("random#" + std::to_string(i),
                         oracle::make_random_distribution(cfg.num_classes, cfg.support, rng));
    }
  }
  if (dists.empty()) {
    throw Error(ErrorKind::UsageError, "oracle-check needs --fixture or --random N");
  }
  oracle::SuiteOptions opts;
  opts.eps = parse_list(cfg.eps, "--eps");
  opts.lambdas = parse_list(cfg.lambdas, "--lambdas");
  opts.hybrid_error = {{cfg.hybrid_ebar, cfg.hybrid_eps}};

  std::size_t passed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  for (const auto& [name, dist] : dists) {
    for (const auto& c : oracle::equivalence_suite(dist, opts)) {
      const char* tag = c.skipped         ? "SKIP"
                        : c.informational ? "INFO"
                        : c.passed        ? "PASS"
                                          : "FAIL";
      out << tag << ' ' << name << ' ' << c.name;
      if (!c.skipped && !c.informational) {
        out << " rule=" << io::format_double(c.rule_objective)
            << " brute=" << io::format_double(c.brute_objective);
      }
      if (!c.detail.empty()) out << " (" << c.detail << ')';
      out << '\n';
      if (c.skipped) {
        ++skipped;
      } else if (c.passed) {
        ++passed;
      } else {
        ++failed;
      }
    }
  }
  out << "summary passed=" << passed << " skipped=" << skipped << " failed=" << failed << '\n';
  return failed == 0 ? kExitOk : kExitGate;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Set-valued classification: calibrate, predict, evaluate, sweep, synth"};
  app.name("setvalued");
  app.require_subcommand(1);

  CalibrateConfig cal;
  auto* c = app.add_subcommand("calibrate", "fit a formulation on a score file");
  add_formulation_flags(c, cal.formulation);
  c->add_option("--scores", cal.scores, "calibration score file")->required();
  c->add_option("--out", cal.out, "model file to write")->required();
  c->add_option("--temperature", cal.temperature, "fit or a value")->capture_default_str();
  c->add_option("--tol", cal.tol, "root-finding and temperature tolerance");
  c->add_option("--sum-tol", cal.sum_tol, "probability sum tolerance")->capture_default_str();
  c->add_option("--seed", cal.seed, "seed recorded in provenance")->capture_default_str();
  c->add_option("--feasibility-k", cal.feasibility_k,
                "average-error only: fail when ebar is below the top-k error");
  c->add_option("--threads", cal.threads)->capture_default_str();

  PredictConfig pred;
  auto* p = app.add_subcommand("predict", "predict label sets");
  p->add_option("--model", pred.model)->required();
  p->add_option("--scores", pred.scores)->required();
  p->add_option("--out", pred.out, "predictions file (stdout when omitted)");
  p->add_option("--sum-tol", pred.sum_tol)->capture_default_str();
  p->add_option("--threads", pred.threads)->capture_default_str();

  EvaluateConfig ev;
  auto* e = app.add_subcommand("evaluate", "metrics on a labeled score file");
  e->add_option("--model", ev.model)->required();
  e->add_option("--scores", ev.scores)->required();
  e->add_option("--out", ev.out, "metrics JSON (stdout when omitted)");
  e->add_option("--per-class", ev.per_class, "per-class CSV table");
  e->add_option("--beta", ev.beta)->capture_default_str();
  e->add_option("--violation-eps", ev.violation_eps, "report per-class violations of eps");
  e->add_option("--max-avg-error", ev.max_avg_error);
  e->add_option("--max-avg-size", ev.max_avg_size);
  e->add_option("--slack", ev.slack)->capture_default_str();
  e->add_option("--sum-tol", ev.sum_tol)->capture_default_str();
  e->add_option("--threads", ev.threads)->capture_default_str();

  SweepConfig sw;
  auto* s = app.add_subcommand("sweep", "error/size curve over a parameter grid");
  add_formulation_flags(s, sw.formulation);
  s->add_option("--grid", sw.grid, "comma-separated ascending values")->required();
  s->add_option("--calib", sw.calib)->required();
  s->add_option("--test", sw.test)->required();
  s->add_option("--out", sw.out, "curve CSV (stdout when omitted)");
  s->add_option("--temperature", sw.temperature)->capture_default_str();
  s->add_option("--repeats", sw.repeats)->capture_default_str();
  s->add_option("--seed", sw.seed)->capture_default_str();
  s->add_flag("--no-bootstrap", sw.no_bootstrap, "refit on the calibration set as is");
  s->add_flag("--class-quantiles", sw.class_quantiles, "add class-error quantile columns");
  s->add_option("--sum-tol", sw.sum_tol)->capture_default_str();
  s->add_option("--threads", sw.threads)->capture_default_str();

  SynthConfig sy;
  auto* y = app.add_subcommand("synth", "generate synthetic score files");
  y->add_option("--template", sy.tmpl, "two-regime, dirichlet-like or near-deterministic")
      ->capture_default_str();
  y->add_option("--L", sy.num_classes)->capture_default_str();
  y->add_option("--n", sy.n)->capture_default_str();
  y->add_option("--support", sy.support)->capture_default_str();
  y->add_option("--seed", sy.seed)->capture_default_str();
  y->add_option("--split", sy.split, "train,calib,test fractions or counts")
      ->capture_default_str();
  y->add_option("--noise", sy.noise, "logit perturbation (miscalibrated scores)")
      ->capture_default_str();
  y->add_flag("--no-logits", sy.no_logits);
  y->add_option("--out-prefix", sy.out_prefix)->required();

  OracleCheckConfig oc;
  auto* o = app.add_subcommand("oracle-check", "closed-form rules against brute force");
  o->add_option("--fixture", oc.fixture, "distribution CSV");
  o->add_option("--random", oc.random, "also check N random distributions");
  o->add_option("--L", oc.num_classes)->capture_default_str();
  o->add_option("--support", oc.support)->capture_default_str();
  o->add_option("--seed", oc.seed)->capture_default_str();
  o->add_option("--eps", oc.eps, "point-wise error levels")->capture_default_str();
  o->add_option("--lambdas", oc.lambdas)->capture_default_str();
  o->add_option("--hybrid-ebar", oc.hybrid_ebar)->capture_default_str();
  o->add_option("--hybrid-eps", oc.hybrid_eps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c) return cmd_calibrate(cal, out);
    if (*p) return cmd_predict(pred, out);
    if (*e) return cmd_evaluate(ev, out, err);
    if (*s) return cmd_sweep(sw, out);
    if (*y) return cmd_synth(sy, out);
    if (*o) return cmd_oracle_check(oc, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return ex.kind() == ErrorKind::UsageError ? kExitUsage : kExitError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"setvalued"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace setvalued::cli
