#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "anisoeig/eig.hpp"
#include "anisoeig/grid.hpp"
#include "anisoeig/rng.hpp"
#include "anisoeig/spectrum.hpp"

namespace anisoeig {

// Monte Carlo for the killed diffusion: Euler-Maruyama with per-coordinate
// drift (eps^2 A' - eps B, a' - b) and diffusions eps*sqrt(2A), sqrt(2a)
// (the Ito correction comes from the backward generator of the
// divergence-form density equation). Death clock: the particle dies when
// the trapezoid-accumulated hazard of d = c_m - c crosses an independent
// Exp(1) threshold, which realizes a clock with rate d(Y_t, Z_t) exactly in
// distribution given the path.

enum class InitialKind { Uniform, Cell, Phi };

struct QsdOptions {
  long n_particles = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  InitialKind initial = InitialKind::Uniform;
  int cell_i = 0, cell_j = 0;
  // Fleming-Viot conditioning: dead particles jump onto a uniformly chosen
  // survivor at fixed resampling windows; keeps the ensemble populated over
  // long horizons where naive conditioning starves.
  bool fleming_viot = false;
  double resample_window = 0.25;
  const EigenPair* reference = nullptr;  // tv target; also the Phi initial law
  int threads = 0;                       // 0: hardware concurrency
};

struct QsdEstimate {
  double t = 0.0;
  long survivors = 0;
  std::vector<double> histogram;  // survivor mass per grid cell, sums to 1
  double tv_vs_phi = std::numeric_limits<double>::quiet_NaN();
};

struct ParticleEnsemble {
  long n_particles = 0;
  std::vector<double> y, z;
  std::vector<double> accumulated_hazard;
  std::vector<double> clock_threshold;  // Exp(1) draws
  std::vector<double> d_prev;           // death rate at the current position
  std::vector<std::uint64_t> rng_state;
  std::vector<std::uint8_t> alive;
  std::uint64_t rng_seed = 0;
  double t = 0.0;
  double dt = 0.0;

  long survivors() const {
    long s = 0;
    for (auto a : alive) s += a;
    return s;
  }
};

namespace detail {

struct CoeffTables {
  static constexpr int kRes1d = 4096;
  static constexpr int kResD = 1024;

  bool y_wrap = true, z_wrap = true;
  std::vector<double> drift_y, sig_y;  // kRes1d+1 samples on [0,1]
  std::vector<double> drift_z, sig_z;
  std::vector<double> d;  // (kResD+1)^2 samples, row-major in y
  double d_max = 0.0;
  double a_y_max = 0.0, a_z_max = 0.0;  // table sup of eps^2*A and a

  static double wrap01(double x) { return x - std::floor(x); }

  static double central_diff(const Expr& e, double x, bool along_y, bool wrap) {
    const double delta = 1e-6;
    auto ev = [&](double t) {
      if (wrap) t = wrap01(t);
      return along_y ? e.eval(t, 0.0) : e.eval(0.0, t);
    };
    if (!wrap) {
      if (x < delta) return (ev(x + delta) - ev(x)) / delta;
      if (x > 1.0 - delta) return (ev(x) - ev(x - delta)) / delta;
    }
    return (ev(x + delta) - ev(x - delta)) / (2.0 * delta);
  }

  CoeffTables(const CoefficientSet& coeffs, const Grid2D& grid, double eps,
              double c_m) {
    y_wrap = grid.gy.periodic();
    z_wrap = grid.gz.periodic();
    drift_y.resize(kRes1d + 1);
    sig_y.resize(kRes1d + 1);
    drift_z.resize(kRes1d + 1);
    sig_z.resize(kRes1d + 1);
    for (int l = 0; l <= kRes1d; ++l) {
      double x = static_cast<double>(l) / kRes1d;
      double xe = y_wrap && l == kRes1d ? 0.0 : x;
      double A = coeffs.A.eval(xe, 0.0);
      double Ap = central_diff(coeffs.A, x, true, y_wrap);
      double B = coeffs.B.eval(xe, 0.0);
      drift_y[static_cast<std::size_t>(l)] = eps * eps * Ap - eps * B;
      sig_y[static_cast<std::size_t>(l)] = eps * std::sqrt(2.0 * A);
      a_y_max = std::max(a_y_max, eps * eps * A);

      double xz = z_wrap && l == kRes1d ? 0.0 : x;
      double a = coeffs.a.eval(0.0, xz);
      double ap = central_diff(coeffs.a, x, false, z_wrap);
      double b = coeffs.b.eval(0.0, xz);
      drift_z[static_cast<std::size_t>(l)] = ap - b;
      sig_z[static_cast<std::size_t>(l)] = std::sqrt(2.0 * a);
      a_z_max = std::max(a_z_max, a);
    }
    d.resize(static_cast<std::size_t>(kResD + 1) * (kResD + 1));
    for (int i = 0; i <= kResD; ++i) {
      double yy = static_cast<double>(i) / kResD;
      double ye = y_wrap && i == kResD ? 0.0 : yy;
      for (int j = 0; j <= kResD; ++j) {
        double zz = static_cast<double>(j) / kResD;
        double ze = z_wrap && j == kResD ? 0.0 : zz;
        double val = c_m - coeffs.c.eval(ye, ze);
        d[static_cast<std::size_t>(i) * (kResD + 1) + j] = val;
        d_max = std::max(d_max, val);
      }
    }
  }

  double lookup1d(const std::vector<double>& tab, double x) const {
    double s = x * kRes1d;
    int i = static_cast<int>(s);
    if (i >= kRes1d) i = kRes1d - 1;
    if (i < 0) i = 0;
    double f = s - i;
    return tab[static_cast<std::size_t>(i)] +
           f * (tab[static_cast<std::size_t>(i) + 1] -
                tab[static_cast<std::size_t>(i)]);
  }

  double lookup_d(double yy, double zz) const {
    double sy = yy * kResD, sz = zz * kResD;
    int i = static_cast<int>(sy), j = static_cast<int>(sz);
    if (i >= kResD) i = kResD - 1;
    if (j >= kResD) j = kResD - 1;
    if (i < 0) i = 0;
    if (j < 0) j = 0;
    double fy = sy - i, fz = sz - j;
    const double* row0 = &d[static_cast<std::size_t>(i) * (kResD + 1) + j];
    const double* row1 = row0 + (kResD + 1);
    double v0 = row0[0] + fz * (row0[1] - row0[0]);
    double v1 = row1[0] + fz * (row1[1] - row1[0]);
    return v0 + fy * (v1 - v0);
  }
};

inline double wrap_torus(double x) { return x - std::floor(x); }

// Reflection by folding: the period-2 triangle wave maps any real onto
// [0,1] with mirror symmetry at both ends.
inline double fold_interval(double x) {
  double t = std::fmod(x, 2.0);
  if (t < 0.0) t += 2.0;
  return t <= 1.0 ? t : 2.0 - t;
}

inline int nearest_cell(double x, int n, bool wrap) {
  if (wrap) {
    int i = static_cast<int>(std::floor(x * n + 0.5));
    i %= n;
    if (i < 0) i += n;
    return i;
  }
  int i = static_cast<int>(std::floor(x * (n - 1) + 0.5));
  return std::clamp(i, 0, n - 1);
}

// Advance a particle range by `steps` fixed steps. Per-particle stream; a
// particle stops drawing once dead, so results are independent of the
// thread partition.
inline void step_range(ParticleEnsemble& e, const CoeffTables& tab, long lo,
                       long hi, long steps) {
  const double dt = e.dt;
  const double sqdt = std::sqrt(dt);
  const double half_dt = 0.5 * dt;
  for (long p = lo; p < hi; ++p) {
    if (!e.alive[static_cast<std::size_t>(p)]) continue;
    RngStream st{e.rng_state[static_cast<std::size_t>(p)]};
    double yy = e.y[static_cast<std::size_t>(p)];
    double zz = e.z[static_cast<std::size_t>(p)];
    double haz = e.accumulated_hazard[static_cast<std::size_t>(p)];
    double dp = e.d_prev[static_cast<std::size_t>(p)];
    const double limit = e.clock_threshold[static_cast<std::size_t>(p)];
    bool live = true;
    for (long s = 0; s < steps; ++s) {
      double g1, g2;
      st.next_normal_pair(g1, g2);
      yy += tab.lookup1d(tab.drift_y, yy) * dt +
            tab.lookup1d(tab.sig_y, yy) * sqdt * g1;
      yy = tab.y_wrap ? wrap_torus(yy) : fold_interval(yy);
      zz += tab.lookup1d(tab.drift_z, zz) * dt +
            tab.lookup1d(tab.sig_z, zz) * sqdt * g2;
      zz = tab.z_wrap ? wrap_torus(zz) : fold_interval(zz);
      double dn = tab.lookup_d(yy, zz);
      haz += half_dt * (dp + dn);
      dp = dn;
      if (haz >= limit) {
        live = false;
        break;
      }
    }
    e.y[static_cast<std::size_t>(p)] = yy;
    e.z[static_cast<std::size_t>(p)] = zz;
    e.accumulated_hazard[static_cast<std::size_t>(p)] = haz;
    e.d_prev[static_cast<std::size_t>(p)] = dp;
    e.alive[static_cast<std::size_t>(p)] = live ? 1 : 0;
    e.rng_state[static_cast<std::size_t>(p)] = st.state;
  }
}

inline void step_parallel(ParticleEnsemble& e, const CoeffTables& tab,
                          long steps, int threads) {
  int nt = threads > 0 ? threads
                       : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::clamp(nt, 1, 16);
  if (nt == 1 || e.n_particles < 4096) {
    step_range(e, tab, 0, e.n_particles, steps);
  } else {
    std::vector<std::thread> pool;
    long chunk = (e.n_particles + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      long lo = t * chunk;
      long hi = std::min<long>(lo + chunk, e.n_particles);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] { step_range(e, tab, lo, hi, steps); });
    }
    for (auto& th : pool) th.join();
  }
  e.t += static_cast<double>(steps) * e.dt;
}

}  // namespace detail

inline ParticleEnsemble init_ensemble(const Grid2D& grid,
                                      const QsdOptions& opt,
                                      const detail::CoeffTables& tab) {
  if (opt.n_particles < 100)
    throw InvalidArgument("need at least 100 particles");
  ParticleEnsemble e;
  e.n_particles = opt.n_particles;
  e.rng_seed = opt.seed;
  e.dt = opt.dt;
  e.t = 0.0;
  const std::size_t n = static_cast<std::size_t>(opt.n_particles);
  e.y.resize(n);
  e.z.resize(n);
  e.accumulated_hazard.assign(n, 0.0);
  e.clock_threshold.resize(n);
  e.d_prev.resize(n);
  e.rng_state.resize(n);
  e.alive.assign(n, 1);

  // cumulative cell masses for sampling from the reference eigenfunction
  std::vector<double> cdf;
  if (opt.initial == InitialKind::Phi) {
    if (!opt.reference)
      throw InvalidArgument("initial=phi needs a reference eigenpair");
    if (static_cast<int>(opt.reference->phi.size()) != grid.size())
      throw InvalidArgument("reference eigenpair does not match the grid");
    cdf.resize(static_cast<std::size_t>(grid.size()));
    double acc = 0.0;
    for (int p = 0; p < grid.size(); ++p) {
      int i = p / grid.gz.n, j = p % grid.gz.n;
      acc += grid.weight(i, j) * opt.reference->phi[static_cast<std::size_t>(p)];
      cdf[static_cast<std::size_t>(p)] = acc;
    }
    for (auto& v : cdf) v /= acc;
  }

  auto cell_span = [](const Grid1D& g, int i, double& lo, double& hi) {
    if (g.periodic()) {
      lo = g.node(i) - 0.5 * g.h;
      hi = g.node(i) + 0.5 * g.h;
    } else {
      lo = std::max(0.0, g.node(i) - 0.5 * g.h);
      hi = std::min(1.0, g.node(i) + 0.5 * g.h);
    }
  };

  for (long p = 0; p < opt.n_particles; ++p) {
    RngStream st = particle_stream(opt.seed, static_cast<std::uint64_t>(p));
    double yy = 0.0, zz = 0.0;
    switch (opt.initial) {
      case InitialKind::Uniform:
        yy = st.next_unit();
        zz = st.next_unit();
        break;
      case InitialKind::Cell:
        if (opt.cell_i < 0 || opt.cell_i >= grid.gy.n || opt.cell_j < 0 ||
            opt.cell_j >= grid.gz.n)
          throw InvalidArgument("initial cell outside the grid");
        yy = grid.gy.node(opt.cell_i);
        zz = grid.gz.node(opt.cell_j);
        break;
      case InitialKind::Phi: {
        double u = st.next_unit();
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        int cell = static_cast<int>(it - cdf.begin());
        if (cell >= grid.size()) cell = grid.size() - 1;
        int i = cell / grid.gz.n, j = cell % grid.gz.n;
        double lo, hi;
        cell_span(grid.gy, i, lo, hi);
        yy = lo + st.next_unit() * (hi - lo);
        if (grid.gy.periodic()) yy = detail::wrap_torus(yy);
        cell_span(grid.gz, j, lo, hi);
        zz = lo + st.next_unit() * (hi - lo);
        if (grid.gz.periodic()) zz = detail::wrap_torus(zz);
        break;
      }
    }
    e.y[static_cast<std::size_t>(p)] = yy;
    e.z[static_cast<std::size_t>(p)] = zz;
    e.clock_threshold[static_cast<std::size_t>(p)] = st.next_exponential();
    e.d_prev[static_cast<std::size_t>(p)] = tab.lookup_d(yy, zz);
    e.rng_state[static_cast<std::size_t>(p)] = st.state;
  }
  return e;
}

inline QsdEstimate make_estimate(const ParticleEnsemble& e, const Grid2D& grid,
                                 double t_label, const EigenPair* reference) {
  QsdEstimate est;
  est.t = t_label;
  std::vector<long> counts(static_cast<std::size_t>(grid.size()), 0);
  long survivors = 0;
  for (long p = 0; p < e.n_particles; ++p) {
    if (!e.alive[static_cast<std::size_t>(p)]) continue;
    ++survivors;
    int i = detail::nearest_cell(e.y[static_cast<std::size_t>(p)], grid.gy.n,
                                 grid.gy.periodic());
    int j = detail::nearest_cell(e.z[static_cast<std::size_t>(p)], grid.gz.n,
                                 grid.gz.periodic());
    ++counts[static_cast<std::size_t>(grid.idx(i, j))];
  }
  est.survivors = survivors;
  est.histogram.assign(static_cast<std::size_t>(grid.size()), 0.0);
  if (survivors > 0)
    for (int p = 0; p < grid.size(); ++p)
      est.histogram[static_cast<std::size_t>(p)] =
          static_cast<double>(counts[static_cast<std::size_t>(p)]) /
          static_cast<double>(survivors);
  if (reference && survivors > 0) {
    double acc = 0.0;
    for (int p = 0; p < grid.size(); ++p) {
      int i = p / grid.gz.n, j = p % grid.gz.n;
      acc += std::fabs(est.histogram[static_cast<std::size_t>(p)] -
                       grid.weight(i, j) *
                           reference->phi[static_cast<std::size_t>(p)]);
    }
    est.tv_vs_phi = 0.5 * acc;
  }
  return est;
}

// One trajectory ensemble, one estimate per checkpoint. Checkpoints are
// rounded to whole steps of dt.
inline std::vector<QsdEstimate> qsd_sweep(const CoefficientSet& coeffs,
                                          const Grid2D& grid, double eps,
                                          const QsdOptions& opt,
                                          const std::vector<double>& t_checkpoints) {
  coeffs.validate(grid);
  if (!(opt.dt > 0.0)) throw InvalidArgument("invalid dt");
  for (std::size_t i = 0; i < t_checkpoints.size(); ++i) {
    if (t_checkpoints[i] < 0.0)
      throw InvalidArgument("checkpoints must be nonnegative");
    if (i > 0 && !(t_checkpoints[i] > t_checkpoints[i - 1]))
      throw InvalidArgument("checkpoints must be increasing");
  }

  const DivergenceSup div = divergence_sup(coeffs, grid);
  detail::CoeffTables tab(coeffs, grid, eps, div.c_m);

  const double hmin = std::min(grid.gy.h, grid.gz.h);
  const double guard = hmin * hmin / (2.0 * std::max(tab.a_y_max, tab.a_z_max));
  if (opt.dt > guard * (1.0 + 1e-12))
    throw InvalidArgument("invalid dt: " + std::to_string(opt.dt) +
                          " exceeds the stability guard " +
                          std::to_string(guard));

  ParticleEnsemble e = init_ensemble(grid, opt, tab);

  std::vector<QsdEstimate> out;
  long steps_done = 0;
  for (double tk : t_checkpoints) {
    long target = std::llround(tk / opt.dt);
    while (steps_done < target) {
      long burst = target - steps_done;
      if (opt.fleming_viot) {
        long wsteps =
            std::max<long>(1, std::llround(opt.resample_window / opt.dt));
        burst = std::min(burst, wsteps);
      }
      detail::step_parallel(e, tab, burst, opt.threads);
      steps_done += burst;
      if (opt.fleming_viot) {
        // redistribute the dead onto uniformly chosen survivors
        std::vector<long> live;
        live.reserve(static_cast<std::size_t>(e.n_particles));
        for (long p = 0; p < e.n_particles; ++p)
          if (e.alive[static_cast<std::size_t>(p)]) live.push_back(p);
        if (live.empty())
          throw NumericalError(
              "all particles dead during resampling; expected survival scale "
              "e^(-c_m t) = " +
              std::to_string(std::exp(-div.c_m * e.t)));
        for (long p = 0; p < e.n_particles; ++p) {
          if (e.alive[static_cast<std::size_t>(p)]) continue;
          RngStream st{e.rng_state[static_cast<std::size_t>(p)]};
          auto pick = static_cast<std::size_t>(st.next_unit() *
                                               static_cast<double>(live.size()));
          if (pick >= live.size()) pick = live.size() - 1;
          long s = live[pick];
          e.y[static_cast<std::size_t>(p)] = e.y[static_cast<std::size_t>(s)];
          e.z[static_cast<std::size_t>(p)] = e.z[static_cast<std::size_t>(s)];
          e.accumulated_hazard[static_cast<std::size_t>(p)] = 0.0;
          e.clock_threshold[static_cast<std::size_t>(p)] = st.next_exponential();
          e.d_prev[static_cast<std::size_t>(p)] =
              e.d_prev[static_cast<std::size_t>(s)];
          e.alive[static_cast<std::size_t>(p)] = 1;
          e.rng_state[static_cast<std::size_t>(p)] = st.state;
        }
      }
    }
    QsdEstimate est = make_estimate(e, grid, tk, opt.reference);
    if (est.survivors == 0)
      throw NumericalError(
          "all particles dead at t = " + std::to_string(tk) +
          "; expected survival scale e^(-c_m t) = " +
          std::to_string(std::exp(-div.c_m * tk)));
    out.push_back(std::move(est));
  }
  return out;
}

inline QsdEstimate simulate(const CoefficientSet& coeffs, const Grid2D& grid,
                            double eps, const QsdOptions& opt, double t_final) {
  return qsd_sweep(coeffs, grid, eps, opt, {t_final}).front();
}

}  // namespace anisoeig
