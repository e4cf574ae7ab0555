#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "anisoeig/spectrum.hpp"

namespace anisoeig {

// Explicit Hamilton-Jacobi solution sampled on a fine torus grid. u is the
// cumulative trapezoid integral of the closed-form derivative; uprime keeps
// the analytic derivative at the samples. kink_set marks the points where
// the derivative formula switches branch (the integer offsets of v).
struct HjSolution {
  std::vector<double> y;
  std::vector<double> u;
  std::vector<double> uprime;
  std::vector<double> kink_set;
  double k_used = 0.0;
  double shift = 0.0;   // coordinate translation applied internally (v only)
  double gamma = 0.0;
  double periodicity_defect = 0.0;
  int refine_factor = 4;
};

namespace detail {

inline void cumulative_trapezoid(const std::vector<double>& deriv, double h,
                                 std::vector<double>& out) {
  out.resize(deriv.size());
  out[0] = 0.0;
  for (std::size_t l = 1; l < deriv.size(); ++l)
    out[l] = out[l - 1] + 0.5 * h * (deriv[l - 1] + deriv[l]);
}

}  // namespace detail

// ubar(y) = -int_0^y B/2A + sign * int_0^y sqrt((k - k^y' + B^2/4A)/A):
// solves -A(u')^2 - B u' - k^y + k = 0 for either branch of the root, and
// is 1-periodic exactly when j(k) = -sign * gamma. The + branch closes the
// period for gamma >= 0, the - branch for gamma <= 0.
inline HjSolution build_ubar(const LocalSpectrum& spec,
                             const CoefficientSet& coeffs, double k,
                             int sign = +1, int refine_factor = 4) {
  if (sign != 1 && sign != -1) throw InvalidArgument("sign must be +1 or -1");
  LimitMachinery mach(spec, coeffs);
  if (k < mach.M() - 1e-10 * (1.0 + std::fabs(mach.M())))
    throw InvalidArgument("k = " + std::to_string(k) +
                          " below M = " + std::to_string(mach.M()) +
                          ": negative under the root");

  const int m = refine_factor * static_cast<int>(spec.k.size());
  const double h = 1.0 / m;
  HjSolution sol;
  sol.refine_factor = refine_factor;
  sol.k_used = k;
  sol.gamma = mach.gamma();
  sol.shift = 0.0;
  sol.y.resize(static_cast<std::size_t>(m) + 1);
  sol.uprime.resize(static_cast<std::size_t>(m) + 1);
  for (int l = 0; l <= m; ++l) {
    double y = l * h;
    double A = coeffs.A.eval(y - std::floor(y), 0.0);
    double root = std::sqrt(std::max(0.0, k - mach.q(y)) / A);
    sol.y[static_cast<std::size_t>(l)] = y;
    sol.uprime[static_cast<std::size_t>(l)] =
        -mach.drift_over_2A(y) + sign * root;
  }
  detail::cumulative_trapezoid(sol.uprime, h, sol.u);
  sol.periodicity_defect = std::fabs(sol.u.back() - sol.u.front());
  return sol;
}

// v(y) = -int_0^y B/2A + sign * int_0^y S(y') sqrt((M - k^y' + B^2/4A)/A)
// over two periods, with S = +1 on [0,1) and -1 on [1,2) in coordinates
// translated so the argmax of k^y - B^2/4A sits at 0. y -> v(y) + gamma*y
// is 2-periodic; the root vanishes at the integer kinks.
inline HjSolution build_v(const LocalSpectrum& spec,
                          const CoefficientSet& coeffs, int sign = +1,
                          int refine_factor = 4) {
  if (sign != 1 && sign != -1) throw InvalidArgument("sign must be +1 or -1");
  LimitMachinery mach(spec, coeffs);
  const double M = mach.M();
  const double ystar = mach.argmax_y();

  const int m = refine_factor * static_cast<int>(spec.k.size());
  const double h = 1.0 / m;
  HjSolution sol;
  sol.refine_factor = refine_factor;
  sol.k_used = M;
  sol.gamma = mach.gamma();
  sol.shift = ystar;
  sol.kink_set = {ystar, ystar + 1.0, ystar + 2.0};
  sol.y.resize(2 * static_cast<std::size_t>(m) + 1);
  sol.uprime.resize(2 * static_cast<std::size_t>(m) + 1);
  for (int l = 0; l <= 2 * m; ++l) {
    double yhat = l * h;             // translated coordinate in [0,2]
    double y = ystar + yhat;         // original frame
    double S = (l / m) % 2 == 0 ? 1.0 : -1.0;
    double A = coeffs.A.eval(y - std::floor(y), 0.0);
    double root = std::sqrt(std::max(0.0, M - mach.q(y)) / A);
    sol.y[static_cast<std::size_t>(l)] = y;
    sol.uprime[static_cast<std::size_t>(l)] =
        -mach.drift_over_2A(y) + sign * S * root;
  }
  detail::cumulative_trapezoid(sol.uprime, h, sol.u);
  sol.periodicity_defect =
      std::fabs((sol.u.back() + sol.gamma * 2.0) - sol.u.front());
  return sol;
}

// Sup of |-A(u')^2 - B u' - k^y + k| over the samples, skipping everything
// within 2 fine cells of a kink (the branch switch is discontinuous there
// by construction).
inline double hj_residual(const HjSolution& sol, const LocalSpectrum& spec,
                          const CoefficientSet& coeffs, double k) {
  LimitMachinery mach(spec, coeffs);
  const double h = sol.y.size() > 1 ? sol.y[1] - sol.y[0] : 1.0;
  double worst = 0.0;
  for (std::size_t l = 0; l < sol.y.size(); ++l) {
    double y = sol.y[l];
    bool near_kink = false;
    for (double kk : sol.kink_set)
      if (std::fabs(y - kk) <= 2.0 * h) near_kink = true;
    if (near_kink) continue;
    double yw = y - std::floor(y);
    double A = coeffs.A.eval(yw, 0.0);
    double B = coeffs.B.eval(yw, 0.0);
    double up = sol.uprime[l];
    double r = -A * up * up - B * up - mach.k_of_y(y) + k;
    worst = std::max(worst, std::fabs(r));
  }
  return worst;
}

}  // namespace anisoeig
