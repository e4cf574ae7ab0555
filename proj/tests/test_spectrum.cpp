#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include "anisoeig/spectrum.hpp"
#include "testutil.hpp"

using namespace anisoeig;

namespace {

CoefficientSet coefficients(const std::string& A, const std::string& B,
                            const std::string& a, const std::string& b,
                            const std::string& c) {
  return CoefficientSet{Expr::parse(A), Expr::parse(B), Expr::parse(a),
                        Expr::parse(b), Expr::parse(c)};
}

}  // namespace

TEST_CASE("interp: periodic spline interpolates and stays accurate between nodes") {
  const int n = 16;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i)
    f[static_cast<std::size_t>(i)] = std::cos(2 * M_PI * i / n);
  PeriodicSpline s(f, 1.0);
  for (int i = 0; i < n; ++i)
    CHECK(s(static_cast<double>(i) / n) ==
          Approx(f[static_cast<std::size_t>(i)]).margin(1e-12));
  RngStream rng{13};
  for (int trial = 0; trial < 100; ++trial) {
    double x = rng.next_unit() * 3.0 - 1.0;  // wraps
    CHECK(s(x) == Approx(std::cos(2 * M_PI * x)).margin(3e-4));
  }
}

TEST_CASE("interp: parabolic refinement recovers an off-node vertex") {
  // samples of -(x - 0.3 - h/3)^2 on a uniform grid: the vertex is a third
  // of a cell right of the closest node
  const int n = 10;
  const double h = 1.0 / n;
  const double xv = 0.3 + h / 3.0;
  std::vector<double> vals(n), xs(n);
  for (int i = 0; i < n; ++i) {
    xs[static_cast<std::size_t>(i)] = i * h;
    double d = i * h - xv;
    vals[static_cast<std::size_t>(i)] = 1.0 - d * d;
  }
  RefinedPeak peak = refine_max_parabolic(vals, xs, h, true);
  CHECK(peak.x == Approx(xv).margin(1e-12));
  CHECK(peak.value == Approx(1.0).margin(1e-12));
}

TEST_CASE("spectrum: c depending on y only gives k^y = c(y), uniform psi") {
  Grid2D grid(build_grid(Domain1D::Torus, 16), build_grid(Domain1D::Torus, 16));
  auto coeffs = coefficients("1", "0", "1", "0", "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  for (int i = 0; i < 16; ++i) {
    double expected = 0.3 + 0.25 * std::cos(2 * M_PI * grid.gy.node(i));
    CHECK(std::fabs(spec.k[static_cast<std::size_t>(i)] - expected) <= 1e-10);
    const auto& psi = spec.psi[static_cast<std::size_t>(i)];
    double mn = *std::min_element(psi.begin(), psi.end());
    double mx = *std::max_element(psi.begin(), psi.end());
    CHECK(mx - mn <= 1e-10);
    // unit discrete integral
    double s = 0.0;
    for (int j = 0; j < 16; ++j)
      s += grid.gz.cell_measure(j) * psi[static_cast<std::size_t>(j)];
    CHECK(s == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("spectrum: additive separation c = f(y) + g(z)") {
  Grid2D grid(build_grid(Domain1D::Torus, 12), build_grid(Domain1D::Torus, 24));
  auto coeffs = coefficients("1", "0", "1+0.2*sin(2*pi*z)", "0",
                             "0.4*cos(2*pi*y) + 0.7*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  std::vector<double> shifted(spec.k.size());
  for (std::size_t i = 0; i < spec.k.size(); ++i)
    shifted[i] = spec.k[i] - 0.4 * std::cos(2 * M_PI * spec.y_nodes[i]);
  double mn = *std::min_element(shifted.begin(), shifted.end());
  double mx = *std::max_element(shifted.begin(), shifted.end());
  CHECK(mx - mn <= 1e-9);
}

TEST_CASE("spectrum: per-slice dense oracle agreement") {
  Grid2D grid(build_grid(Domain1D::Torus, 8), build_grid(Domain1D::Torus, 64));
  auto coeffs = coefficients("1", "0", "1", "0", "cos(2*pi*y)*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  for (int i = 0; i < grid.gy.n; ++i) {
    SparseOperator op = assemble_local(grid.gz, coeffs, grid.gy.node(i));
    EigenPair oracle = dense_oracle(op);
    CHECK(std::fabs(spec.k[static_cast<std::size_t>(i)] - oracle.k) <= 1e-9);
  }
}

TEST_CASE("spectrum: B = 0 prediction is the refined max of k^y") {
  Grid2D grid(build_grid(Domain1D::Torus, 32), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", "0", "1", "0", "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  LimitPrediction pred = predict_limit(spec, coeffs);
  CHECK(pred.regime == Regime::Bzero);
  CHECK(pred.gamma == 0.0);
  CHECK(std::fabs(pred.k0 - 0.55) <= 1e-9);  // max at the node y=0
  CHECK(std::fabs(pred.M - pred.k0) <= 1e-12);
  CHECK(pred.jM >= 0.0);
}

TEST_CASE("spectrum: constant transport with y-only c gives M = max c - beta^2, gamma = beta") {
  // B = 2*beta, A = 1: B^2/4A = beta^2, gamma = int B/2A = beta
  const double beta = 0.35;
  Grid2D grid(build_grid(Domain1D::Torus, 64), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", testutil::num(2.0 * beta), "1", "0",
                             "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  LimitPrediction pred = predict_limit(spec, coeffs);
  CHECK(std::fabs(pred.M - (0.55 - beta * beta)) <= 1e-9);
  CHECK(std::fabs(pred.gamma - beta) <= 1e-12);
}

TEST_CASE("spectrum: j is strictly increasing and invertible") {
  Grid2D grid(build_grid(Domain1D::Torus, 32), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1+0.3*cos(2*pi*y)", "0.8", "1", "0",
                             "0.3*cos(2*pi*y)+0.2*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  LimitMachinery mach(spec, coeffs);
  double jm = mach.j(mach.M());
  double prev = jm;
  for (double dk : {0.5, 1.0, 2.0, 4.0, 7.0, 10.0}) {
    double cur = mach.j(mach.M() + dk);
    CHECK(cur > prev);
    prev = cur;
  }
  for (double t : {jm + 0.1, jm + 1.0, jm + 2.5, jm + 5.0}) {
    double k = mach.j_inverse(t);
    CHECK(std::fabs(mach.j(k) - t) <= 1e-8);
  }
  // continuity at the regime boundary
  CHECK(std::fabs(mach.j_inverse(jm) - mach.M()) <= 1e-8);
}

TEST_CASE("spectrum: prediction refused for nonzero B off the torus") {
  Grid2D grid(build_grid(Domain1D::Interval, 16), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", "0.5*y*(1-y)", "1", "0", "cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  CHECK_THROWS_AS(predict_limit(spec, coeffs), InvalidArgument);
}

TEST_CASE("spectrum: B = 0 prediction works on an interval y-domain") {
  Grid2D grid(build_grid(Domain1D::Interval, 17), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", "0", "1", "0", "0.5 - 0.3*(y-0.5)^2");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  LimitPrediction pred = predict_limit(spec, coeffs);
  CHECK(pred.regime == Regime::Bzero);
  CHECK(std::fabs(pred.k0 - 0.5) <= 1e-9);  // interior max at y = 0.5 (a node)
}

TEST_CASE("spectrum: slice TV vanishes for y-independent coefficients") {
  Grid2D grid(build_grid(Domain1D::Torus, 16), build_grid(Domain1D::Torus, 16));
  auto coeffs = coefficients("1", "0", "1", "0", "0.6*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  for (double eps : {0.4, 0.1}) {
    SparseOperator op = assemble_global(grid, coeffs, eps);
    EigenPair global = principal_eigenpair(op, 1e-11);
    TvDiagnostic tv = slice_tv_diagnostic(global, spec, grid);
    CHECK(tv.sup <= 1e-10);
  }
}

TEST_CASE("spectrum: TV of a slice family against itself is zero") {
  Grid2D grid(build_grid(Domain1D::Torus, 8), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", "0", "1", "0", "0.4*cos(2*pi*y)*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  EigenPair fake;
  fake.phi.resize(static_cast<std::size_t>(grid.size()));
  for (int i = 0; i < grid.gy.n; ++i)
    for (int j = 0; j < grid.gz.n; ++j)
      fake.phi[static_cast<std::size_t>(grid.idx(i, j))] =
          spec.psi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  TvDiagnostic tv = slice_tv_diagnostic(fake, spec, grid);
  CHECK(tv.sup <= 1e-14);
}

TEST_CASE("spectrum: sup TV decreases along the eps ladder") {
  Grid2D grid(build_grid(Domain1D::Torus, 16), build_grid(Domain1D::Torus, 16));
  auto coeffs = coefficients("1", "0", "1", "0", "cos(2*pi*y)*cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
  double prev = 2.0;
  for (double eps : {0.4, 0.2, 0.1}) {
    SparseOperator op = assemble_global(grid, coeffs, eps);
    EigenPair global = principal_eigenpair(op, 1e-11);
    TvDiagnostic tv = slice_tv_diagnostic(global, spec, grid);
    CHECK(tv.sup < prev);
    prev = tv.sup;
  }
}

TEST_CASE("spectrum: k^y jumps shrink under y-refinement") {
  auto coeffs = coefficients("1", "0", "1", "0",
                             "cos(2*pi*y)*(1+0.5*cos(2*pi*z))");
  double jump[2];
  int idx = 0;
  for (int ny : {16, 32}) {
    Grid2D grid(build_grid(Domain1D::Torus, ny), build_grid(Domain1D::Torus, 16));
    LocalSpectrum spec = local_spectrum(grid, coeffs, 1e-11);
    double mx = 0.0;
    for (std::size_t i = 0; i < spec.k.size(); ++i)
      mx = std::max(mx, std::fabs(spec.k[(i + 1) % spec.k.size()] - spec.k[i]));
    jump[idx++] = mx;
  }
  CHECK(jump[1] <= 0.7 * jump[0]);
}

TEST_CASE("spectrum: divergence sups and the killing bound") {
  Grid2D grid(build_grid(Domain1D::Torus, 64), build_grid(Domain1D::Torus, 64));

  auto const_b = coefficients("1", "0.7", "1", "0.3", "0");
  DivergenceSup d1 = divergence_sup(const_b, grid);
  CHECK(d1.div_B_sup <= 1e-10);
  CHECK(d1.div_b_sup <= 1e-10);
  CHECK(std::fabs(d1.c_m - 1.0) <= 1e-9);  // c = 0, constants: c_m = 1

  auto sine = coefficients("1", "sin(2*pi*y)", "1", "0", "0");
  DivergenceSup d2 = divergence_sup(sine, grid);
  CHECK(std::fabs(d2.div_B_sup - 2.0 * M_PI) <= 2e-2);

  auto with_c = coefficients("1", "0", "1", "0", "0.25 - 0.5*cos(2*pi*y)");
  DivergenceSup d3 = divergence_sup(with_c, grid);
  CHECK(std::fabs(d3.c_m - 1.75) <= 1e-9);
}

TEST_CASE("spectrum: zero slice mass is rejected") {
  Grid2D grid(build_grid(Domain1D::Torus, 4), build_grid(Domain1D::Torus, 4));
  auto coeffs = coefficients("1", "0", "1", "0", "0");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  EigenPair broken;
  broken.phi.assign(static_cast<std::size_t>(grid.size()), 0.0);
  CHECK_THROWS_WITH(slice_tv_diagnostic(broken, spec, grid),
                    Catch::Contains("slice mass"));
}

TEST_CASE("spectrum: local solve failures carry the y position") {
  Grid2D grid(build_grid(Domain1D::Torus, 8), build_grid(Domain1D::Torus, 8));
  // c blows up at the node y = 0.25; the error must name that slice
  auto coeffs = coefficients("1", "0", "1", "0", "1/(4*y-1)");
  CHECK_THROWS_WITH(local_spectrum(grid, coeffs),
                    Catch::Contains("local solve at y = 0.25"));
}
