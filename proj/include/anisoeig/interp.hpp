#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anisoeig/errors.hpp"

namespace anisoeig {

namespace detail {

// Solves the cyclic tridiagonal system with constant stencil (a, b, c) by
// Sherman-Morrison on top of a plain Thomas sweep. Diagonally dominant use
// only (spline systems), so no pivoting.
inline std::vector<double> solve_cyclic_tridiag_const(double a, double b,
                                                      double c,
                                                      const std::vector<double>& d) {
  const std::size_t n = d.size();
  if (n < 3) throw InvalidArgument("cyclic tridiagonal system too small");
  const double gamma = -b;

  auto thomas = [&](const std::vector<double>& rhs, double b0, double bl) {
    std::vector<double> cp(n), x(n);
    cp[0] = c / b0;
    x[0] = rhs[0] / b0;
    for (std::size_t i = 1; i < n; ++i) {
      double bi = (i == n - 1) ? bl : b;
      double m = bi - a * cp[i - 1];
      cp[i] = c / m;
      x[i] = (rhs[i] - a * x[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
    return x;
  };

  const double b0 = b - gamma;
  const double bl = b - a * c / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = c;
  std::vector<double> y = thomas(d, b0, bl);
  std::vector<double> q = thomas(u, b0, bl);
  const double vy = y[0] + (a / gamma) * y[n - 1];
  const double vq = q[0] + (a / gamma) * q[n - 1];
  const double factor = vy / (1.0 + vq);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - factor * q[i];
  return x;
}

}  // namespace detail

// Cubic spline through values at the uniform nodes i*period/n of a periodic
// function. C^2, matches the data exactly at the nodes.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  explicit PeriodicSpline(std::vector<double> values, double period = 1.0)
      : f_(std::move(values)), period_(period) {
    const std::size_t n = f_.size();
    if (n < 4) throw InvalidArgument("spline needs at least 4 samples");
    h_ = period_ / static_cast<double>(n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      double fm = f_[(i + n - 1) % n], fp = f_[(i + 1) % n];
      rhs[i] = 6.0 * (fm - 2.0 * f_[i] + fp) / (h_ * h_);
    }
    m_ = detail::solve_cyclic_tridiag_const(1.0, 4.0, 1.0, rhs);
  }

  double operator()(double x) const {
    const std::size_t n = f_.size();
    double t = x / period_;
    t -= std::floor(t);
    double s = t * static_cast<double>(n);
    auto i = static_cast<std::size_t>(s);
    if (i >= n) i = n - 1;
    double u = s - static_cast<double>(i);  // in [0,1)
    std::size_t ip = (i + 1) % n;
    double a = 1.0 - u;
    return a * f_[i] + u * f_[ip] +
           (h_ * h_ / 6.0) *
               ((a * a * a - a) * m_[i] + (u * u * u - u) * m_[ip]);
  }

 private:
  std::vector<double> f_;
  std::vector<double> m_;
  double period_ = 1.0;
  double h_ = 0.0;
};

struct RefinedPeak {
  double x = 0.0;
  double value = 0.0;
  int node_index = 0;
};

// Max of sampled values with one parabolic refinement through the argmax and
// its neighbors. Uniform spacing h; on a non-periodic range a boundary
// argmax falls back to the node itself.
inline RefinedPeak refine_max_parabolic(const std::vector<double>& values,
                                        const std::vector<double>& xs,
                                        double h, bool periodic) {
  const std::size_t n = values.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (values[i] > values[best]) best = i;

  RefinedPeak peak;
  peak.node_index = static_cast<int>(best);
  peak.x = xs[best];
  peak.value = values[best];

  if (!periodic && (best == 0 || best == n - 1)) return peak;

  double qm = values[(best + n - 1) % n];
  double q0 = values[best];
  double qp = values[(best + 1) % n];
  double den = qm - 2.0 * q0 + qp;
  if (!(den < 0.0)) return peak;  // flat or degenerate: keep the node
  double delta = 0.5 * h * (qm - qp) / den;
  if (std::fabs(delta) > h) return peak;
  double vertex = q0 - 0.25 * (qm - qp) * delta / h;
  peak.x = xs[best] + delta;
  peak.value = std::max(vertex, q0);
  return peak;
}

}  // namespace anisoeig
