#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bridger/params.h"

namespace bridger::ad {

struct GradCheckEntry {
  std::string param;
  int index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool pass = true;
  // Largest relative error among entries whose analytic/numeric gap is
  // resolvable above the central-difference roundoff floor. Entries below
  // the floor agree to the full precision the method can measure.
  double max_rel_error = 0.0;
  double max_abs_disagreement = 0.0;  // over every entry, resolvable or not
  double tolerance = 1e-4;
  double noise_floor = 0.0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> failures;  // capped at 32 entries

  std::string summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << " max-rel-err=" << max_rel_error
       << " max-abs-gap=" << max_abs_disagreement << " fd-noise-floor=" << noise_floor;
    if (worst.index >= 0) os << " worst=" << worst.param << "[" << worst.index << "]";
    return os.str();
  }
};

// Central finite differences against the analytic reverse pass. `eval`
// rebuilds and evaluates the scalar fragment; when need_grad is true it must
// also run backward so params carry analytic gradients. Run at 64-bit.
//
// relative error = |a - n| / max(|a|, |n|, 1e-8). A difference of two
// function values of magnitude |f| carries roundoff of order eps*|f|, so
// (f+ - f-)/2h cannot resolve gradients below eps*|f|/(2h); entries whose
// disagreement stays under that floor (with margin) are counted as agreeing.
inline GradCheckReport finite_difference_check(
    ParameterSet<double>& params, const std::function<double(bool need_grad)>& eval,
    double tolerance = 1e-4, double step = 1e-5) {
  GradCheckReport report;
  report.tolerance = tolerance;

  params.zero_grads();
  const double f0 = eval(true);
  report.noise_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(f0)) / (2.0 * step);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params.items()) analytic.push_back(p->grad.values);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params.items()[pi];
    for (std::int64_t i = 0; i < p.value.numel(); ++i) {
      const double v = p.value[i];
      p.value[i] = v + step;
      const double f_plus = eval(false);
      p.value[i] = v - step;
      const double f_minus = eval(false);
      p.value[i] = v;

      const double numeric = (f_plus - f_minus) / (2.0 * step);
      const double a = analytic[pi][static_cast<std::size_t>(i)];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_abs_disagreement = std::max(report.max_abs_disagreement, std::abs(a - numeric));
      if (std::abs(a - numeric) <= report.noise_floor) continue;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = {p.name, static_cast<int>(i), a, numeric, rel};
      }
      if (rel > tolerance) {
        report.pass = false;
        if (report.failures.size() < 32) {
          report.failures.push_back({p.name, static_cast<int>(i), a, numeric, rel});
        }
      }
    }
  }
  return report;
}

// Healthy uniform weights for verification runs. Training-scale
// initialization attenuates deep paths below what central differences can
// measure, so correctness checks re-draw every parameter at this scale.
inline void randomize_for_gradcheck(ParameterSet<double>& params, Rng& rng,
                                    double scale = 0.5) {
  for (auto& p : params.items()) {
    for (auto& v : p->value.values) v = rng.uniform(-scale, scale);
  }
}

}  // namespace bridger::ad
