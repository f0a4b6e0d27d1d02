// Content leakage of the MI-penalized model against the unpenalized baseline,
// paired seeds, K = 10 style tokens.

#include "criteria.hpp"
#include "mist/evaluation.hpp"
#include "support.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("leakage");
  testing::Stopwatch clock;
  RunConfig cfg;
  cfg.model.num_tokens = 10;
  ExperimentRunner runner(testing::make_dataset(cfg.dataset), cfg);

  double mist_ter = 0.0, base_ter = 0.0;
  for (auto seed : cfg.eval.seeds) {
    const ArmResult& m = runner.arm({.lambda = 0.1, .clip_mi = true, .seed = seed});
    const ArmResult& b = runner.arm({.lambda = 0.0, .clip_mi = true, .seed = seed});
    log.info(fmt("seed %llu", static_cast<unsigned long long>(seed)),
             fmt("TER lambda=0.1 %.4f (style match %.2f), lambda=0 %.4f (style match %.2f)", m.leakage.mean_ter,
                 m.leakage.style_match_rate, b.leakage.mean_ter, b.leakage.style_match_rate));
    mist_ter += m.leakage.mean_ter;
    base_ter += b.leakage.mean_ter;
  }
  mist_ter /= cfg.eval.seeds.size();
  base_ter /= cfg.eval.seeds.size();
  log.check("TER direction", mist_ter <= base_ter - 0.05,
            fmt("mean TER lambda=0.1 %.4f vs lambda=0 %.4f, required <= baseline - 0.05", mist_ter, base_ter));
  const double t = clock.seconds();
  log.check("runtime", t < 1800.0, fmt("%.1f s (limit 1800 s)", t));
  return log.finish();
}
