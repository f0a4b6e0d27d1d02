#include "mist/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mist {

bool GradCheckReport::ok() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.ok; });
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.ok ? "ok   " : "FAIL ") << e.name << " max_rel_err=" << e.max_rel_error;
    if (!e.ok) os << " at [" << e.worst_index << "] analytic=" << e.analytic << " numeric=" << e.numeric;
    os << '\n';
  }
  return os.str();
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(const std::function<Tensor()>& loss, const ParamList& params,
                                        double h, double tolerance) {
  std::vector<bool> saved_flags;
  for (const auto& p : params) {
    saved_flags.push_back(p.tensor.requires_grad());
    auto t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tensor l = loss();
    backward(l);
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& p : params) {
    auto t = p.tensor;
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    GradCheckEntry entry{.name = p.name};
    auto vals = t.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + h;
      const double fp = loss().item();
      vals[i] = orig - h;
      const double fm = loss().item();
      vals[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      double err = relative_error(analytic[i], numeric);
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      if (i == 0 || err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.analytic = analytic[i];
        entry.numeric = numeric;
      }
    }
    entry.ok = entry.max_rel_error <= tolerance;
    report.entries.push_back(std::move(entry));
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto t = params[i].tensor;
    t.zero_grad();
    t.set_requires_grad(saved_flags[i]);
  }
  return report;
}

}  // namespace mist
