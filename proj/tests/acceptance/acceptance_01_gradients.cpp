// Analytic gradients of every network under both losses against central
// differences at 10 seeded points.

#include "criteria.hpp"
#include "mist/selftest.hpp"
#include "support.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("gradients");
  testing::Stopwatch clock;
  for (const auto& c : network_gradient_cases()) {
    double worst = 0.0;
    int bad = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      GradCheckReport r = run_gradient_case(c, seed, 1e-4);
      worst = std::max(worst, r.max_rel_error());
      bad += !r.ok();
    }
    log.check(c.name, bad == 0, fmt("max rel error %.3g over 10 points (tol 1e-4), %d failing", worst, bad));
  }
  const double t = clock.seconds();
  log.check("runtime", t < 30.0, fmt("%.1f s (limit 30 s)", t));
  return log.finish();
}
