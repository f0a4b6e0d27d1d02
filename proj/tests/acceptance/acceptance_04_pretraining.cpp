// Stage-1 convergence at the default configuration.

#include <cmath>
#include <numbers>

#include "criteria.hpp"
#include "mist/training.hpp"
#include "support.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("pretraining");
  testing::Stopwatch clock;
  RunConfig cfg;
  Dataset data = testing::make_dataset(cfg.dataset);
  PretrainResult r = pretrain(data.splits.pretrain, data.splits.heldout, cfg.model, cfg.train);
  const double floor = cfg.dataset.noise * std::sqrt(2.0 / std::numbers::pi);
  log.check("heldout L1", r.heldout_l1 < 0.1,
            fmt("%.4f per element after %zu epochs, limit 0.1 (noise floor %.4f)", r.heldout_l1, r.epoch_loss.size(), floor));
  log.check("encoder frozen", r.content_encoder.frozen(), "content encoder frozen after stage 1");
  const double t = clock.seconds();
  log.check("runtime", t < 300.0, fmt("%.1f s (limit 300 s)", t));
  return log.finish();
}
