// MINE against the closed-form MI of correlated unit Gaussians,
// I = -0.5 log(1 - rho^2).

#include <cmath>

#include "criteria.hpp"
#include "mist/mine.hpp"
#include "support.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("gaussian_mi");
  testing::Stopwatch clock;
  auto closed_form = [](double rho) { return -0.5 * std::log(1.0 - rho * rho); };

  Rng r0(0);
  const double e0 = estimate_gaussian_mi(0.0, 2000, r0);
  log.check("rho=0", std::fabs(e0) < 0.05, fmt("estimate %.4f, |est| < 0.05", e0));

  Rng r5(0);
  const double e5 = estimate_gaussian_mi(0.5, 3000, r5);
  log.check("rho=0.5", std::fabs(e5 - 0.1438) < 0.1,
            fmt("estimate %.4f vs 0.1438 (closed form %.4f), tol 0.1", e5, closed_form(0.5)));

  // The stated target 1.1136 disagrees with the closed form at rho=0.9
  // (0.8304); the estimate is judged against the closed form.
  Rng r9(0);
  const double e9 = estimate_gaussian_mi(0.9, 3000, r9);
  log.check("rho=0.9", std::fabs(e9 - closed_form(0.9)) < 0.15,
            fmt("estimate %.4f vs closed form %.4f, tol 0.15", e9, closed_form(0.9)));
  log.info("rho=0.9 literal target", fmt("|estimate - 1.1136| = %.4f", std::fabs(e9 - 1.1136)));

  const double t = clock.seconds();
  log.check("runtime", t < 180.0, fmt("%.1f s (limit 180 s)", t));
  return log.finish();
}
