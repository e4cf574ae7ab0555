#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "anisoeig/operators.hpp"

namespace anisoeig {

// Principal (Perron) eigenpair: real eigenvalue of maximal real part with a
// strictly positive eigenvector, normalized to unit discrete integral
// (sum_i w_i phi_i = 1).
struct EigenPair {
  double k = 0.0;
  std::vector<double> phi;
  double residual = 0.0;   // ||L phi - k phi||_inf / ||phi||_inf
  long iterations = 0;
};

namespace detail {

inline double weighted_sum(const std::vector<double>& w,
                           const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
  return s;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline Eigen::SparseMatrix<double> shifted_identity_minus(
    const SparseOperator& op, double mu) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(op.vals.size() + static_cast<std::size_t>(op.dim));
  for (int p = 0; p < op.dim; ++p) {
    bool diag_seen = false;
    for (int t = op.row_offsets[p]; t < op.row_offsets[p + 1]; ++t) {
      int q = op.cols[static_cast<std::size_t>(t)];
      double v = -op.vals[static_cast<std::size_t>(t)];
      if (q == p) {
        v += mu;
        diag_seen = true;
      }
      trips.emplace_back(p, q, v);
    }
    if (!diag_seen) trips.emplace_back(p, p, mu);
  }
  Eigen::SparseMatrix<double> m(op.dim, op.dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace detail

// Shifted power iteration on M = L + sigma*I with sigma taken from the
// Gershgorin data of the assembled matrix, accelerated by shift-invert
// steps (direct sparse solve) anchored at the running eigenvalue estimate.
// The iterate is renormalized to sum w phi = 1 after every step and must
// stay positive; with the shift strictly to the right of the spectrum the
// resolvent of the flux-form matrix is entrywise positive, so positivity is
// preserved and any sign flip signals an assembly problem or a shift below
// the principal eigenvalue (the latter is recovered by backing off).
inline EigenPair principal_eigenpair(const SparseOperator& op,
                                     double tol = 1e-10,
                                     long max_iter = 200000) {
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const int n = op.dim;
  const auto& w = op.weights;

  // sigma makes every diagonal of L + sigma*I dominate its off-diagonal row
  // sum; for the flux-form stencil the off-diagonals are already >= 0 at
  // resolved cell Peclet numbers, so M is entrywise nonnegative.
  double sigma = 0.0;
  for (int p = 0; p < n; ++p) {
    double offsum = 0.0, diag = 0.0;
    for (int t = op.row_offsets[p]; t < op.row_offsets[p + 1]; ++t) {
      if (op.cols[static_cast<std::size_t>(t)] == p)
        diag = op.vals[static_cast<std::size_t>(t)];
      else
        offsum += std::fabs(op.vals[static_cast<std::size_t>(t)]);
    }
    sigma = std::max(sigma, offsum - diag);
  }
  sigma += 1.0;

  std::vector<double> phi(static_cast<std::size_t>(n), 1.0);
  {
    double s = detail::weighted_sum(w, phi);
    for (auto& x : phi) x /= s;
  }

  long iters = 0;
  double k_hat = 0.0, residual = std::numeric_limits<double>::infinity();

  auto update_estimate = [&](const std::vector<double>& lphi) {
    k_hat = detail::weighted_sum(w, lphi);
    double r = 0.0;
    for (int p = 0; p < n; ++p)
      r = std::max(r, std::fabs(lphi[static_cast<std::size_t>(p)] -
                                k_hat * phi[static_cast<std::size_t>(p)]));
    residual = r / detail::inf_norm(phi);
  };

  // phase 1: plain power steps (also the only phase for huge operators)
  const long power_phase = 50;
  std::vector<double> lphi = op.apply(phi);
  update_estimate(lphi);
  while (iters < max_iter && residual > tol) {
    if (iters >= power_phase && n <= 20000) break;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      x[static_cast<std::size_t>(p)] =
          lphi[static_cast<std::size_t>(p)] + sigma * phi[static_cast<std::size_t>(p)];
      if (!(x[static_cast<std::size_t>(p)] > 0.0))
        throw NumericalError("nonpositive iterate in power step (row " +
                             std::to_string(p) + ")");
    }
    double s = detail::weighted_sum(w, x);
    for (auto& v : x) v /= s;
    phi.swap(x);
    lphi = op.apply(phi);
    update_estimate(lphi);
    ++iters;
  }

  // phase 2: shift-invert sweeps with a shrinking offset above the estimate
  if (residual > tol && n <= 20000) {
    double offset = (op.c_max - k_hat) + 1.0;  // mu starts right of c_max >= k
    int bad_rounds = 0;
    while (iters < max_iter && residual > tol) {
      double mu = k_hat + offset;
      Eigen::SparseMatrix<double> m = detail::shifted_identity_minus(op, mu);
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(m);
      if (lu.info() != Eigen::Success) {
        offset *= 4.0;
        if (++bad_rounds > 60)
          throw NumericalError("shift-invert factorization kept failing");
        continue;
      }
      bool round_ok = true;
      for (int inner = 0; inner < 20 && residual > tol && iters < max_iter;
           ++inner) {
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(phi.data(), n);
        Eigen::VectorXd sol = lu.solve(rhs);
        if (lu.info() != Eigen::Success) {
          round_ok = false;
          break;
        }
        if (sol.maxCoeff() <= 0.0) sol = -sol;  // sign is free, fix it positive
        if (sol.minCoeff() < -1e-14 * sol.maxCoeff()) {
          round_ok = false;  // mixed signs: mu dipped below the spectrum top
          break;
        }
        std::vector<double> x(sol.data(), sol.data() + n);
        double s = detail::weighted_sum(w, x);
        if (!(s > 0.0) || !std::isfinite(s)) {
          round_ok = false;
          break;
        }
        for (auto& v : x) v /= s;
        phi.swap(x);
        lphi = op.apply(phi);
        double prev = residual;
        update_estimate(lphi);
        ++iters;
        if (residual < tol) break;
        if (residual > 0.5 * prev) break;  // rate exhausted at this shift
      }
      if (!round_ok) {
        offset *= 4.0;
        if (++bad_rounds > 60)
          throw NumericalError(
              "shift-invert acceleration failed to keep a positive iterate");
        continue;
      }
      offset = std::max(0.25 * offset, 32.0 * residual + 1e-13 * (1.0 + std::fabs(k_hat)));
    }
  }

  if (residual > tol)
    throw NumericalError("eigensolver did not converge within " +
                         std::to_string(max_iter) + " iterations (residual " +
                         std::to_string(residual) + ")");
  for (int p = 0; p < n; ++p)
    if (!(phi[static_cast<std::size_t>(p)] > 0.0))
      throw NumericalError("converged eigenvector is not strictly positive");

  EigenPair out;
  out.k = k_hat;
  out.phi = std::move(phi);
  out.residual = residual;
  out.iterations = iters;
  return out;
}

// Test oracle: densify, take the full spectrum from a QR-type solver, pick
// the eigenvalue of maximal real part and verify that its eigenvector can
// be chosen positive. Independent of the sparse iteration above.
inline EigenPair dense_oracle(const SparseOperator& op) {
  if (op.dim > 2500)
    throw InvalidArgument("dense oracle limited to dimension 2500, got " +
                          std::to_string(op.dim));
  const int n = op.dim;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int t = op.row_offsets[p]; t < op.row_offsets[p + 1]; ++t)
      dense(p, op.cols[static_cast<std::size_t>(t)]) +=
          op.vals[static_cast<std::size_t>(t)];

  Eigen::EigenSolver<Eigen::MatrixXd> es(dense, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw NumericalError("dense eigendecomposition failed");

  int best = 0;
  for (int i = 1; i < n; ++i)
    if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
  const std::complex<double> lambda = es.eigenvalues()(best);
  if (std::fabs(lambda.imag()) > 1e-8 * (1.0 + std::fabs(lambda.real())))
    throw NumericalError(
        "principal eigenvalue is complex: discretization broke the Perron "
        "structure");
  const double k = lambda.real();

  // rotate the complex eigenvector onto the real axis, then polish with two
  // inverse-iteration steps to restore strict positivity lost to roundoff
  Eigen::VectorXcd vc = es.eigenvectors().col(best);
  int imax = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(vc(i)) > std::abs(vc(imax))) imax = i;
  std::complex<double> phase = vc(imax) / std::abs(vc(imax));
  Eigen::VectorXd v = (vc / phase).real();

  double delta = 1e-11 * (1.0 + std::fabs(k));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense -
                                          (k + delta) * Eigen::MatrixXd::Identity(n, n));
  for (int step = 0; step < 2; ++step) {
    Eigen::VectorXd nv = lu.solve(v);
    double nrm = nv.cwiseAbs().maxCoeff();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    v = nv / nrm;
  }
  if (v.sum() < 0.0) v = -v;
  for (int i = 0; i < n; ++i)
    if (!(v(i) > 0.0))
      throw NumericalError(
          "principal eigenvector is not positive: discretization broke the "
          "Perron structure");

  EigenPair out;
  out.phi.assign(v.data(), v.data() + n);
  double s = detail::weighted_sum(op.weights, out.phi);
  for (auto& x : out.phi) x /= s;
  out.k = k;
  std::vector<double> lphi = op.apply(out.phi);
  double r = 0.0;
  for (int p = 0; p < n; ++p)
    r = std::max(r, std::fabs(lphi[static_cast<std::size_t>(p)] -
                              k * out.phi[static_cast<std::size_t>(p)]));
  out.residual = r / detail::inf_norm(out.phi);
  out.iterations = 0;
  return out;
}

}  // namespace anisoeig
