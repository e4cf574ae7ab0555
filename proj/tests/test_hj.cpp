#include <catch2/catch.hpp>

#include <cmath>

#include "anisoeig/hj.hpp"
#include "testutil.hpp"

using namespace anisoeig;

namespace {

CoefficientSet coefficients(const std::string& A, const std::string& B,
                            const std::string& a, const std::string& b,
                            const std::string& c) {
  return CoefficientSet{Expr::parse(A), Expr::parse(B), Expr::parse(a),
                        Expr::parse(b), Expr::parse(c)};
}

LocalSpectrum spectrum_for(const CoefficientSet& coeffs, int ny, int nz) {
  Grid2D grid(build_grid(Domain1D::Torus, ny), build_grid(Domain1D::Torus, nz));
  return local_spectrum(grid, coeffs, 1e-11);
}

}  // namespace

TEST_CASE("hj: constant c and no transport gives a straight line") {
  auto coeffs = coefficients("1", "0", "1", "0", "0.75");
  LocalSpectrum spec = spectrum_for(coeffs, 16, 8);
  // k^y = 0.75 = M; at k = M + 1 the integrand is constant 1
  HjSolution sol = build_ubar(spec, coeffs, 1.75);
  for (std::size_t l = 0; l < sol.y.size(); ++l) {
    CHECK(std::fabs(sol.uprime[l] - 1.0) <= 1e-9);
    CHECK(std::fabs(sol.u[l] - sol.y[l]) <= 1e-9);
  }
}

TEST_CASE("hj: ubar closes the period at k = j_inverse(|gamma|)") {
  auto coeffs = coefficients("1", "6", "1", "0", "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = spectrum_for(coeffs, 64, 8);
  LimitPrediction pred = predict_limit(spec, coeffs);
  REQUIRE(pred.regime == Regime::TransportSupercritical);
  CHECK(std::fabs(pred.gamma - 3.0) <= 1e-12);

  HjSolution sol = build_ubar(spec, coeffs, pred.k0, +1);
  CHECK(sol.periodicity_defect <= 1e-7);
  CHECK(hj_residual(sol, spec, coeffs, pred.k0) <= 1e-6);

  // a miscalibrated k shows up as a residual of the same size
  HjSolution wrong = build_ubar(spec, coeffs, pred.k0 + 0.5, +1);
  double r = hj_residual(wrong, spec, coeffs, pred.k0);
  CHECK(r == Approx(0.5).margin(0.02));
  CHECK(wrong.periodicity_defect > 1e-3);
}

TEST_CASE("hj: negative gamma uses the other root branch") {
  auto coeffs = coefficients("1", "-6", "1", "0", "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = spectrum_for(coeffs, 64, 8);
  LimitPrediction pred = predict_limit(spec, coeffs);
  REQUIRE(pred.regime == Regime::TransportSupercritical);
  CHECK(std::fabs(pred.gamma + 3.0) <= 1e-12);

  HjSolution sol = build_ubar(spec, coeffs, pred.k0, -1);
  CHECK(sol.periodicity_defect <= 1e-7);
  CHECK(hj_residual(sol, spec, coeffs, pred.k0) <= 1e-6);

  // the + branch does not close the period when gamma < 0
  HjSolution plus = build_ubar(spec, coeffs, pred.k0, +1);
  CHECK(plus.periodicity_defect > 1.0);
}

TEST_CASE("hj: k below M is rejected") {
  auto coeffs = coefficients("1", "0", "1", "0", "0.3+0.25*cos(2*pi*y)");
  LocalSpectrum spec = spectrum_for(coeffs, 32, 8);
  CHECK_THROWS_AS(build_ubar(spec, coeffs, -1.0), InvalidArgument);
}

TEST_CASE("hj: v starts at zero and reaches j(M) - gamma at one period") {
  auto coeffs = coefficients("1", "0.4", "1", "0",
                             "0.3+0.25*cos(2*pi*y)+0.1*cos(2*pi*z)");
  LocalSpectrum spec = spectrum_for(coeffs, 64, 16);
  LimitPrediction pred = predict_limit(spec, coeffs);
  REQUIRE(pred.regime == Regime::TransportSubcritical);

  HjSolution sol = build_v(spec, coeffs, +1);
  CHECK(sol.u.front() == 0.0);
  // sample index of yhat = 1 is refine*ny
  std::size_t mid = sol.u.size() / 2;
  double v1 = sol.u[mid];
  CHECK(std::fabs(v1 - (pred.jM - pred.gamma)) <= 1e-5);
  CHECK(v1 > 0.0);

  // y -> v(y) + gamma*y is 2-periodic
  CHECK(sol.periodicity_defect <= 1e-7);

  // residual away from the integer kinks
  CHECK(hj_residual(sol, spec, coeffs, pred.M) <= 1e-6);

  // kink set sits at the translated integers
  REQUIRE(sol.kink_set.size() == 3);
  CHECK(sol.kink_set[1] - sol.kink_set[0] == Approx(1.0));
  CHECK(sol.kink_set[2] - sol.kink_set[0] == Approx(2.0));
  CHECK(sol.shift == Approx(sol.kink_set[0]));
}

TEST_CASE("hj: v with negative gamma") {
  auto coeffs = coefficients("1", "-0.4", "1", "0",
                             "0.3+0.25*cos(2*pi*y)+0.1*cos(2*pi*z)");
  LocalSpectrum spec = spectrum_for(coeffs, 64, 16);
  LimitPrediction pred = predict_limit(spec, coeffs);
  REQUIRE(pred.regime == Regime::TransportSubcritical);
  HjSolution sol = build_v(spec, coeffs, -1);
  CHECK(sol.periodicity_defect <= 1e-7);
  CHECK(hj_residual(sol, spec, coeffs, pred.M) <= 1e-6);
}

TEST_CASE("hj: defects shrink when the fine grid refines") {
  auto coeffs = coefficients("1", "6", "1", "0",
                             "0.3+0.25*cos(2*pi*y)+0.1*cos(2*pi*z)");
  LocalSpectrum spec = spectrum_for(coeffs, 32, 16);
  LimitPrediction pred = predict_limit(spec, coeffs);
  REQUIRE(pred.regime == Regime::TransportSupercritical);
  HjSolution coarse = build_ubar(spec, coeffs, pred.k0, +1, 4);
  HjSolution fine = build_ubar(spec, coeffs, pred.k0, +1, 8);
  // defects bottom out at the consistency floor between the fine trapezoid
  // and the singular-refined quadrature that pinned k (~1e-9 here)
  CHECK(fine.periodicity_defect <=
        std::max(coarse.periodicity_defect / 3.0, 1e-9));
}

TEST_CASE("hj: interval y-domain is rejected") {
  Grid2D grid(build_grid(Domain1D::Interval, 16), build_grid(Domain1D::Torus, 8));
  auto coeffs = coefficients("1", "0", "1", "0", "cos(2*pi*z)");
  LocalSpectrum spec = local_spectrum(grid, coeffs);
  CHECK_THROWS_AS(build_ubar(spec, coeffs, 5.0), InvalidArgument);
  CHECK_THROWS_AS(build_v(spec, coeffs), InvalidArgument);
}
