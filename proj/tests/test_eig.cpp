#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "anisoeig/eig.hpp"
#include "testutil.hpp"

using namespace anisoeig;
using testutil::densify;
using testutil::make_random_scenario;

namespace {

// angle between two positive vectors, stable near zero
double vector_angle(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0, nb = 0, dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    dot += a[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  double orth = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] / na - (dot / (na * nb)) * b[i] / nb;
    orth += d * d;
  }
  return std::asin(std::min(1.0, std::sqrt(orth)));
}

}  // namespace

TEST_CASE("eig: constants are exact eigenfunctions at constant c") {
  Grid2D grid(build_grid(Domain1D::Torus, 8), build_grid(Domain1D::Torus, 8));
  CoefficientSet coeffs{Expr::constant(1), Expr::constant(0.5),
                        Expr::constant(1), Expr::constant(0.3),
                        Expr::constant(0.75)};
  for (double eps : {0.4, 0.1}) {
    SparseOperator op = assemble_global(grid, coeffs, eps);
    EigenPair pair = principal_eigenpair(op);
    CHECK(std::fabs(pair.k - 0.75) <= 1e-10);
    double mn = *std::min_element(pair.phi.begin(), pair.phi.end());
    double mx = *std::max_element(pair.phi.begin(), pair.phi.end());
    CHECK(mx - mn <= 1e-10);
    CHECK(mn > 0.0);
  }
}

TEST_CASE("eig: shift equivariance") {
  auto sc = make_random_scenario(2, 8, 8);
  SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
  SparseOperator shifted = op.shifted(2.5);
  EigenPair p1 = principal_eigenpair(op);
  EigenPair p2 = principal_eigenpair(shifted);
  CHECK(std::fabs(p2.k - p1.k - 2.5) <= 1e-11);
  for (std::size_t i = 0; i < p1.phi.size(); ++i)
    CHECK(std::fabs(p1.phi[i] - p2.phi[i]) <= 1e-11);
}

TEST_CASE("eig: matches the dense oracle on random scenarios") {
  for (int s = 0; s < 6; ++s) {
    auto sc = make_random_scenario(s, 8, 8);
    SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
    EigenPair ours = principal_eigenpair(op, 1e-11);
    EigenPair oracle = dense_oracle(op);
    INFO("scenario " << s);
    CHECK(std::fabs(ours.k - oracle.k) <= 1e-9);
    CHECK(vector_angle(ours.phi, oracle.phi) <= 1e-7);
    CHECK(*std::min_element(ours.phi.begin(), ours.phi.end()) > 0.0);
    CHECK(*std::min_element(oracle.phi.begin(), oracle.phi.end()) > 0.0);
  }
}

TEST_CASE("eig: 1-D periodic Laplacian spectrum against the Fourier symbol") {
  Grid1D gz = build_grid(Domain1D::Torus, 4);
  CoefficientSet coeffs{Expr::constant(1), Expr::constant(0), Expr::constant(1),
                        Expr::constant(0), Expr::constant(0)};
  SparseOperator op = assemble_local(gz, coeffs, 0.0);

  EigenPair principal = dense_oracle(op);
  CHECK(std::fabs(principal.k) <= 1e-9);

  // full spectrum: -(2/h^2)(1 - cos(2 pi m / n)), m = 0..3 -> {0,-32,-32,-64}
  Eigen::EigenSolver<Eigen::MatrixXd> es(densify(op));
  std::vector<double> eigs;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::fabs(es.eigenvalues()(i).imag()) <= 1e-9);
    eigs.push_back(es.eigenvalues()(i).real());
  }
  std::sort(eigs.begin(), eigs.end());
  CHECK(eigs[0] == Approx(-64.0).margin(1e-9));
  CHECK(eigs[1] == Approx(-32.0).margin(1e-9));
  CHECK(eigs[2] == Approx(-32.0).margin(1e-9));
  CHECK(eigs[3] == Approx(0.0).margin(1e-9));

  // constant c shifts the principal eigenvalue
  CoefficientSet ck = coeffs;
  ck.c = Expr::constant(1.25);
  CHECK(std::fabs(dense_oracle(assemble_local(gz, ck, 0.0)).k - 1.25) <= 1e-9);
}

TEST_CASE("eig: monotone in the zeroth-order coefficient") {
  auto sc = make_random_scenario(1, 8, 8);
  SparseOperator op1 = assemble_global(sc.grid, sc.coeffs, sc.eps);
  CoefficientSet bumped = sc.coeffs;
  bumped.c = Expr::binary(Expr::BOp::Add, sc.coeffs.c,
                          Expr::parse("0.2*(1+cos(2*pi*z))"));
  SparseOperator op2 = assemble_global(sc.grid, bumped, sc.eps);
  EigenPair p1 = principal_eigenpair(op1);
  EigenPair p2 = principal_eigenpair(op2);
  CHECK(p2.k >= p1.k - 1e-12);
}

TEST_CASE("eig: |k| bounded by the sup of c") {
  for (int s = 0; s < 6; ++s) {
    auto sc = make_random_scenario(s + 10, 8, 8);
    SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
    EigenPair p = principal_eigenpair(op);
    CHECK(std::fabs(p.k) <= op.c_absmax() + 1e-9);
  }
}

TEST_CASE("eig: adjoint has the same principal eigenvalue") {
  for (int s : {0, 5}) {
    auto sc = make_random_scenario(s, 8, 8);
    SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
    EigenPair fwd = dense_oracle(op);
    EigenPair adj = dense_oracle(weighted_adjoint(op));
    CHECK(std::fabs(fwd.k - adj.k) <= 1e-9);
  }
}

TEST_CASE("eig: residual reported below tolerance") {
  auto sc = make_random_scenario(4, 8, 8);
  SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
  EigenPair p = principal_eigenpair(op, 1e-11);
  CHECK(p.residual <= 1e-11);
  auto lphi = op.apply(p.phi);
  double r = 0.0, nrm = 0.0;
  for (std::size_t i = 0; i < p.phi.size(); ++i) {
    r = std::max(r, std::fabs(lphi[i] - p.k * p.phi[i]));
    nrm = std::max(nrm, std::fabs(p.phi[i]));
  }
  CHECK(r / nrm <= 1e-11);
  // normalization: weighted sum is one
  double s = 0.0;
  for (std::size_t i = 0; i < p.phi.size(); ++i)
    s += op.weights[i] * p.phi[i];
  CHECK(s == Approx(1.0).margin(1e-12));
}

TEST_CASE("eig: a sign-flipping matrix is flagged as a bad assembly") {
  // handcrafted operator with a dominating negative off-diagonal; the power
  // iterate leaves the positive cone on the second step
  SparseOperator op;
  op.dim = 2;
  op.row_offsets = {0, 2, 4};
  op.cols = {0, 1, 0, 1};
  op.vals = {0.0, -10.0, 0.1, 0.0};
  op.ny = 1;
  op.nz = 2;
  op.local = true;
  op.weights = {0.5, 0.5};
  op.c_min = 0.0;
  op.c_max = 0.0;
  CHECK_THROWS_WITH(principal_eigenpair(op),
                    Catch::Contains("nonpositive iterate"));
}

TEST_CASE("eig: failure modes") {
  auto sc = make_random_scenario(0, 8, 8);
  SparseOperator op = assemble_global(sc.grid, sc.coeffs, sc.eps);
  CHECK_THROWS_AS(principal_eigenpair(op, 1e-10, 3), NumericalError);
  CHECK_THROWS_AS(principal_eigenpair(op, -1.0), InvalidArgument);

  Grid2D big(build_grid(Domain1D::Torus, 64), build_grid(Domain1D::Torus, 64));
  SparseOperator bigop = assemble_global(
      big, CoefficientSet{Expr::constant(1), Expr::constant(0),
                          Expr::constant(1), Expr::constant(0),
                          Expr::constant(0)},
      1.0);
  CHECK_THROWS_AS(dense_oracle(bigop), InvalidArgument);
}
