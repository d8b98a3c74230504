// Calibrates a few formulations on synthetic scores and reports held-out
// error and size for each.

#include <cstdio>
#include <string>

#include "setvalued/setvalued.hpp"

using namespace setvalued;

int main() {
  const auto synth =
      oracle::synth_generate(oracle::Template::DirichletLike, 10, 20000, 42, 1000);
  const auto& all = synth.sample.scores;
  ScoreSet calib(all.num_classes());
  ScoreSet test(all.num_classes());
  for (std::size_t i = 0; i < all.size(); ++i) (i < 10000 ? calib : test).add(all[i]);

  const std::vector<FormulationSpec> specs{
      {formulation::TopK{2}},
      {formulation::AverageSize{2.0}},
      {formulation::AverageError{0.05}},
      {formulation::PointwiseError{0.1, 0.0, true}},
      {formulation::HybridSize{1.5, 3}},
      {formulation::FScore{1.0}},
  };
  std::printf("%-16s %8s %10s %9s\n", "formulation", "theta", "avg_error", "avg_size");
  for (const auto& spec : specs) {
    const auto c = calibrate(spec, calib);
    const auto r = evaluate(c, test);
    const std::string name(formulation_name(spec.kind));
    if (c.theta) {
      std::printf("%-16s %8.4f %10.4f %9.4f\n", name.c_str(), *c.theta, r.avg_error, r.avg_size);
    } else {
      std::printf("%-16s %8s %10.4f %9.4f\n", name.c_str(), "-", r.avg_error, r.avg_size);
    }
  }

  // The same threshold as a set-valued prediction for one sample.
  const auto c = calibrate({formulation::AverageSize{2.0}}, calib);
  const auto set = c.predict(test[0].probs);
  std::printf("\nsample %s ->", test[0].id.c_str());
  for (int l : set.labels()) std::printf(" %d", l);
  std::printf("\n");
}
