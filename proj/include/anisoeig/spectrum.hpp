#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "anisoeig/eig.hpp"
#include "anisoeig/interp.hpp"
#include "anisoeig/operators.hpp"

namespace anisoeig {

// The local spectrum curve y -> (k^y, psi^y): one z-only principal
// eigenpair per y-node, each psi positive with unit discrete z-integral.
struct LocalSpectrum {
  std::vector<double> y_nodes;
  std::vector<double> k;
  std::vector<std::vector<double>> psi;
  Domain1D ydom = Domain1D::Torus;
  double hy = 0.0;
  Grid1D gz;
};

inline LocalSpectrum local_spectrum(const Grid2D& grid,
                                    const CoefficientSet& coeffs,
                                    double tol = 1e-10) {
  coeffs.validate(grid);
  LocalSpectrum spec;
  spec.ydom = grid.gy.domain;
  spec.hy = grid.gy.h;
  spec.gz = grid.gz;
  spec.y_nodes = grid.gy.nodes;
  spec.k.reserve(static_cast<std::size_t>(grid.gy.n));
  spec.psi.reserve(static_cast<std::size_t>(grid.gy.n));
  for (int i = 0; i < grid.gy.n; ++i) {
    double y0 = grid.gy.node(i);
    try {
      SparseOperator op = assemble_local(grid.gz, coeffs, y0);
      EigenPair pair = principal_eigenpair(op, tol);
      spec.k.push_back(pair.k);
      spec.psi.push_back(std::move(pair.phi));
    } catch (const Error& e) {
      throw NumericalError("local solve at y = " + std::to_string(y0) +
                           " failed: " + e.what());
    }
  }
  return spec;
}

enum class Regime { Bzero, TransportSubcritical, TransportSupercritical };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Bzero: return "Bzero";
    case Regime::TransportSubcritical: return "TransportSubcritical";
    case Regime::TransportSupercritical: return "TransportSupercritical";
  }
  return "?";
}

// Predicted small-eps limit of the principal eigenvalue:
//   M  = max_y (k^y - B^2/4A)      (parabolic refinement of the grid max)
//   gamma = int_0^1 B/(2A)
//   j(k)  = int_0^1 sqrt((k - k^y + B^2/4A)/A)
//   k0 = M when |gamma| <= j(M), else j^{-1}(|gamma|).
struct LimitPrediction {
  double M = 0.0;
  double gamma = 0.0;
  double jM = 0.0;
  double k0 = 0.0;
  Regime regime = Regime::Bzero;
  double argmax_y = 0.0;
};

// Quadrature machinery shared by the limit predictor and the explicit
// Hamilton-Jacobi constructions. Torus y-domain only: k^y is interpolated
// by a periodic cubic spline; A and B are evaluated exactly. Integrals use
// trapezoid sums on an internally refined grid (the node-resolution data is
// the input, the quadrature resolution is not tied to it), with the two
// fine cells flanking the argmax refined by 32x midpoint sums to tame the
// square-root vertex of j near k = M.
class LimitMachinery {
 public:
  LimitMachinery(const LocalSpectrum& spec, const CoefficientSet& coeffs)
      : coeffs_(coeffs) {
    if (spec.ydom != Domain1D::Torus)
      throw InvalidArgument(
          "limit machinery requires a torus y-domain (nonzero B on an "
          "interval is outside the predicted regime)");
    kspline_ = PeriodicSpline(spec.k, 1.0);

    std::vector<double> qn(spec.k.size());
    for (std::size_t i = 0; i < spec.k.size(); ++i)
      qn[i] = q_at_nodes(spec, static_cast<int>(i));
    RefinedPeak peak =
        refine_max_parabolic(qn, spec.y_nodes, spec.hy, /*periodic=*/true);
    M_ = peak.value;
    ystar_ = peak.x;

    resolution_ = std::max(4096, 16 * static_cast<int>(spec.k.size()));
    gamma_ = integrate([&](double y) { return drift_over_2A(y); });
    amax_ = 0.0;
    for (int l = 0; l < resolution_; ++l)
      amax_ = std::max(amax_, coeffs_.A.eval(static_cast<double>(l) / resolution_, 0.0));
  }

  double M() const { return M_; }
  double argmax_y() const { return ystar_; }
  double gamma() const { return gamma_; }

  // spline k^y minus B^2/4A, defined for every y (wrapped)
  double q(double y) const {
    double yw = wrap(y);
    double A = coeffs_.A.eval(yw, 0.0);
    double B = coeffs_.B.eval(yw, 0.0);
    return kspline_(yw) - B * B / (4.0 * A);
  }

  double k_of_y(double y) const { return kspline_(wrap(y)); }

  double j(double k) const {
    if (k < M_ - 1e-12 * (1.0 + std::fabs(M_)))
      throw InvalidArgument("j(k) needs k >= M");
    return integrate_singular([&](double y) {
      double A = coeffs_.A.eval(wrap(y), 0.0);
      return std::sqrt(std::max(0.0, k - q(y)) / A);
    });
  }

  // Bisection inverse of the strictly increasing j on [M, infinity).
  double j_inverse(double target) const {
    double jm = j(M_);
    if (target < jm - 1e-12)
      throw InvalidArgument("j_inverse target below j(M)");
    double lo = M_;
    double width = std::max(1.0, gamma_ * gamma_ * amax_);
    double hi = M_ + width;
    int guard = 0;
    while (j(hi) < target) {
      width *= 2.0;
      hi = M_ + width;
      if (++guard > 200)
        throw NumericalError("j_inverse bracket failed to close");
    }
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (j(mid) < target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-13 * (1.0 + std::fabs(hi))) break;
    }
    return 0.5 * (lo + hi);
  }

  double drift_over_2A(double y) const {
    double yw = wrap(y);
    return coeffs_.B.eval(yw, 0.0) / (2.0 * coeffs_.A.eval(yw, 0.0));
  }

 private:
  static double wrap(double y) {
    double t = y - std::floor(y);
    return t;
  }

  double q_at_nodes(const LocalSpectrum& spec, int i) const {
    double y = spec.y_nodes[static_cast<std::size_t>(i)];
    double A = coeffs_.A.eval(y, 0.0);
    double B = coeffs_.B.eval(y, 0.0);
    return spec.k[static_cast<std::size_t>(i)] - B * B / (4.0 * A);
  }

  template <class F>
  double integrate(F&& f) const {
    const int R = resolution_;
    double s = 0.5 * (f(0.0) + f(1.0));
    for (int l = 1; l < R; ++l) s += f(static_cast<double>(l) / R);
    return s / R;
  }

  template <class F>
  double integrate_singular(F&& f) const {
    const int R = resolution_;
    const double h = 1.0 / R;
    int lstar = static_cast<int>(std::floor(wrap(ystar_) * R));
    double s = 0.0;
    for (int l = 0; l < R; ++l) {
      bool near_vertex = (l == lstar) || (l == (lstar + 1) % R) ||
                         (l == (lstar + R - 1) % R);
      double a = l * h, b = (l + 1) * h;
      if (near_vertex) {
        const int sub = 32;
        double acc = 0.0;
        for (int m = 0; m < sub; ++m)
          acc += f(a + (m + 0.5) * (b - a) / sub);
        s += acc * (b - a) / sub;
      } else {
        s += 0.5 * (f(a) + f(b)) * (b - a);
      }
    }
    return s;
  }

  CoefficientSet coeffs_;
  PeriodicSpline kspline_;
  double M_ = 0.0, ystar_ = 0.0, gamma_ = 0.0, amax_ = 1.0;
  int resolution_ = 1024;
};

inline LimitPrediction predict_limit(const LocalSpectrum& spec,
                                     const CoefficientSet& coeffs) {
  double bsup = 0.0;
  for (double y : spec.y_nodes)
    bsup = std::max(bsup, std::fabs(coeffs.B.eval(y, 0.0)));

  LimitPrediction pred;
  if (bsup <= 1e-14) {
    // no transport: the limit is the best local eigenvalue
    RefinedPeak peak = refine_max_parabolic(
        spec.k, spec.y_nodes, spec.hy, spec.ydom == Domain1D::Torus);
    pred.M = peak.value;
    pred.argmax_y = peak.x;
    pred.gamma = 0.0;
    pred.k0 = peak.value;
    pred.regime = Regime::Bzero;
    if (spec.ydom == Domain1D::Torus) {
      LimitMachinery mach(spec, coeffs);
      pred.jM = mach.j(mach.M());
    } else {
      pred.jM = 0.0;
    }
    return pred;
  }

  LimitMachinery mach(spec, coeffs);
  pred.M = mach.M();
  pred.argmax_y = mach.argmax_y();
  pred.gamma = mach.gamma();
  pred.jM = mach.j(mach.M());
  if (std::fabs(pred.gamma) <= pred.jM) {
    pred.regime = Regime::TransportSubcritical;
    pred.k0 = pred.M;
  } else {
    pred.regime = Regime::TransportSupercritical;
    pred.k0 = mach.j_inverse(std::fabs(pred.gamma));
  }
  return pred;
}

// Per-y total variation between the normalized z-slices of the global
// eigenfunction and the local eigenfunctions, plus the sup over y. TV is
// half the weighted L1 distance between the two probability vectors.
struct TvDiagnostic {
  std::vector<double> per_y;
  double sup = 0.0;
};

inline TvDiagnostic slice_tv_diagnostic(const EigenPair& global,
                                        const LocalSpectrum& spec,
                                        const Grid2D& grid) {
  if (static_cast<int>(global.phi.size()) != grid.size())
    throw InvalidArgument("global eigenpair does not match the grid");
  if (spec.y_nodes.size() != static_cast<std::size_t>(grid.gy.n))
    throw InvalidArgument("local spectrum does not match the grid");

  TvDiagnostic tv;
  tv.per_y.resize(static_cast<std::size_t>(grid.gy.n));
  for (int i = 0; i < grid.gy.n; ++i) {
    double mass = 0.0;
    for (int j = 0; j < grid.gz.n; ++j)
      mass += grid.gz.cell_measure(j) *
              global.phi[static_cast<std::size_t>(grid.idx(i, j))];
    if (!(mass > 0.0))
      throw NumericalError("zero slice mass at y-node " + std::to_string(i));
    double acc = 0.0;
    const auto& psi = spec.psi[static_cast<std::size_t>(i)];
    for (int j = 0; j < grid.gz.n; ++j) {
      double slice =
          global.phi[static_cast<std::size_t>(grid.idx(i, j))] / mass;
      acc += grid.gz.cell_measure(j) *
             std::fabs(slice - psi[static_cast<std::size_t>(j)]);
    }
    tv.per_y[static_cast<std::size_t>(i)] = 0.5 * acc;
    tv.sup = std::max(tv.sup, tv.per_y[static_cast<std::size_t>(i)]);
  }
  return tv;
}

// Sup norms of the transport divergences (central differences on the grid,
// one-sided second order at interval ends) and the killing bound
// c_m = ||c||_inf + ||div b||_inf + ||div B||_inf + 1.
struct DivergenceSup {
  double div_B_sup = 0.0;
  double div_b_sup = 0.0;
  double c_m = 0.0;
};

namespace detail {

template <class Eval>
inline double derivative_sup_1d(const Grid1D& g, Eval&& f) {
  double sup = 0.0;
  const double h = g.h;
  auto wrap = [](double x) { return x - std::floor(x); };
  for (int i = 0; i < g.n; ++i) {
    double d;
    if (g.periodic()) {
      d = (f(wrap(g.node(i) + h)) - f(wrap(g.node(i) - h))) / (2.0 * h);
    } else if (i == 0) {
      d = (-3.0 * f(g.node(0)) + 4.0 * f(g.node(1)) - f(g.node(2))) / (2.0 * h);
    } else if (i == g.n - 1) {
      d = (3.0 * f(g.node(i)) - 4.0 * f(g.node(i - 1)) + f(g.node(i - 2))) /
          (2.0 * h);
    } else {
      d = (f(g.node(i + 1)) - f(g.node(i - 1))) / (2.0 * h);
    }
    sup = std::max(sup, std::fabs(d));
  }
  return sup;
}

}  // namespace detail

inline DivergenceSup divergence_sup(const CoefficientSet& coeffs,
                                    const Grid2D& grid) {
  DivergenceSup out;
  out.div_B_sup = detail::derivative_sup_1d(
      grid.gy, [&](double y) { return coeffs.B.eval(y, 0.0); });
  out.div_b_sup = detail::derivative_sup_1d(
      grid.gz, [&](double z) { return coeffs.b.eval(0.0, z); });
  double csup = 0.0;
  for (int i = 0; i < grid.gy.n; ++i)
    for (int j = 0; j < grid.gz.n; ++j)
      csup = std::max(csup,
                      std::fabs(coeffs.c.eval(grid.gy.node(i), grid.gz.node(j))));
  out.c_m = csup + out.div_B_sup + out.div_b_sup + 1.0;
  return out;
}

}  // namespace anisoeig
