// MI between content and style vectors, measured by a fresh statistics
// network on the frozen models after training.

#include <cmath>

#include "criteria.hpp"
#include "mist/evaluation.hpp"
#include "support.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("mi_probe");
  RunConfig cfg;
  ExperimentRunner runner(testing::make_dataset(cfg.dataset), cfg);
  const auto& train = runner.data().splits.train;
  MiProbeOptions opts;
  opts.epochs = cfg.eval.probe_epochs;
  opts.batch_size = cfg.eval.probe_batch_size;
  opts.learning_rate = cfg.eval.probe_learning_rate;
  opts.seed = cfg.eval.probe_seed;

  double mist_mi = 0.0, base_mi = 0.0, worst_noise = 0.0;
  for (auto seed : cfg.eval.seeds) {
    const SynthesisModel& m = runner.arm({.lambda = 0.1, .clip_mi = true, .seed = seed}).training.model;
    const SynthesisModel& b = runner.arm({.lambda = 0.0, .clip_mi = true, .seed = seed}).training.model;
    const double em = mi_probe(m, train, opts).estimate.back();
    const double eb = mi_probe(b, train, opts).estimate.back();
    const double en = mi_probe(m, train, opts, ProbeSource::kIndependentNoise).estimate.back();
    log.info(fmt("seed %llu", static_cast<unsigned long long>(seed)),
             fmt("epoch-%zu estimate lambda=0.1 %.4f, lambda=0 %.4f, noise control %.4f", opts.epochs, em, eb, en));
    mist_mi += em;
    base_mi += eb;
    worst_noise = std::max(worst_noise, std::fabs(en));
  }
  mist_mi /= cfg.eval.seeds.size();
  base_mi /= cfg.eval.seeds.size();
  log.check("MI direction", mist_mi < base_mi,
            fmt("mean epoch-%zu estimate lambda=0.1 %.4f vs lambda=0 %.4f", opts.epochs, mist_mi, base_mi));
  log.check("noise control", worst_noise <= 0.05, fmt("max |estimate| %.4f, tol 0.05", worst_noise));
  return log.finish();
}
