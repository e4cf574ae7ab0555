#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anisoeig/expr.hpp"
#include "anisoeig/grid.hpp"

namespace anisoeig {

// The five coefficient functions. A and B may depend on y only, a and b on
// z only, c on both. A and a must be uniformly elliptic on the grid; on an
// interval domain the matching transport coefficient must vanish at the two
// endpoints (no boundary flux).
struct CoefficientSet {
  Expr A, B, a, b, c;

  void validate(const Grid2D& grid) const {
    if (A.depends_on(Expr::Var::Z) || B.depends_on(Expr::Var::Z))
      throw InvalidArgument("A and B may depend on y only");
    if (a.depends_on(Expr::Var::Y) || b.depends_on(Expr::Var::Y))
      throw InvalidArgument("a and b may depend on z only");

    auto check_elliptic = [](const Expr& e, const Grid1D& g, const char* name,
                             bool along_y) {
      // nodes and face midpoints, both used by the assembly
      for (int i = 0; i < g.n; ++i) {
        double x = g.node(i);
        double v = along_y ? e.eval(x, 0.0) : e.eval(0.0, x);
        if (!(v > 0.0))
          throw NumericalError(std::string("ellipticity violation: ") + name +
                               "(" + std::to_string(x) + ") = " +
                               std::to_string(v));
        if (g.periodic() || i < g.n - 1) {
          double m = x + 0.5 * g.h;
          double vm = along_y ? e.eval(m, 0.0) : e.eval(0.0, m);
          if (!(vm > 0.0))
            throw NumericalError(std::string("ellipticity violation: ") + name +
                                 "(" + std::to_string(m) + ") = " +
                                 std::to_string(vm));
        }
      }
    };
    check_elliptic(A, grid.gy, "A", true);
    check_elliptic(a, grid.gz, "a", false);

    const double flux_tol = 1e-12;
    if (grid.gy.domain == Domain1D::Interval) {
      if (std::fabs(B.eval(0.0, 0.0)) > flux_tol ||
          std::fabs(B.eval(1.0, 0.0)) > flux_tol)
        throw NumericalError(
            "boundary-flux violation: B must vanish at the ends of the "
            "y-interval");
    }
    if (grid.gz.domain == Domain1D::Interval) {
      if (std::fabs(b.eval(0.0, 0.0)) > flux_tol ||
          std::fabs(b.eval(0.0, 1.0)) > flux_tol)
        throw NumericalError(
            "boundary-flux violation: b must vanish at the ends of the "
            "z-interval");
    }
  }
};

// Compressed-row real matrix for a discretized elliptic operator, at most 5
// nonzeros per row. Carries the grid layout, the quadrature weights and the
// sampled range of c so that the eigensolver is self-contained.
struct SparseOperator {
  int dim = 0;
  std::vector<int> row_offsets;  // size dim+1
  std::vector<int> cols;
  std::vector<double> vals;

  // metadata
  int ny = 0, nz = 0;  // ny == 1 for a local (z-only) operator
  Domain1D ydom = Domain1D::Torus, zdom = Domain1D::Torus;
  bool local = false;
  double eps = 0.0;  // meaningless when local
  std::vector<double> weights;
  double c_min = 0.0, c_max = 0.0;

  double c_absmax() const { return std::max(std::fabs(c_min), std::fabs(c_max)); }

  std::vector<double> apply(std::span<const double> v) const {
    if (static_cast<int>(v.size()) != dim)
      throw InvalidArgument("dimension mismatch: vector has " +
                            std::to_string(v.size()) +
                            " entries, operator is " + std::to_string(dim));
    std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
    for (int p = 0; p < dim; ++p) {
      double acc = 0.0;
      for (int t = row_offsets[p]; t < row_offsets[p + 1]; ++t)
        acc += vals[static_cast<std::size_t>(t)] *
               v[static_cast<std::size_t>(cols[static_cast<std::size_t>(t)])];
      out[static_cast<std::size_t>(p)] = acc;
    }
    return out;
  }

  // L + delta*I with metadata kept consistent.
  SparseOperator shifted(double delta) const {
    SparseOperator s = *this;
    for (int p = 0; p < dim; ++p) {
      for (int t = row_offsets[p]; t < row_offsets[p + 1]; ++t)
        if (s.cols[static_cast<std::size_t>(t)] == p)
          s.vals[static_cast<std::size_t>(t)] += delta;
    }
    s.c_min += delta;
    s.c_max += delta;
    return s;
  }
};

// Free-function form of the matrix-vector product. Call it qualified
// (anisoeig::apply): with std containers as arguments, unqualified calls
// pull std::apply into the candidate set via ADL, which libstdc++ cannot
// even form for non-tuples.
inline std::vector<double> apply(const SparseOperator& op,
                                 std::span<const double> v) {
  return op.apply(v);
}

namespace detail {

// Row-major triplet accumulator; duplicate (row,col) entries are summed.
class CsrBuilder {
 public:
  explicit CsrBuilder(int dim) : dim_(dim), rows_(static_cast<std::size_t>(dim)) {}

  void add(int row, int col, double v) {
    auto& r = rows_[static_cast<std::size_t>(row)];
    for (auto& e : r) {
      if (e.first == col) {
        e.second += v;
        return;
      }
    }
    r.emplace_back(col, v);
  }

  void finish(SparseOperator& op) const {
    op.dim = dim_;
    op.row_offsets.assign(static_cast<std::size_t>(dim_) + 1, 0);
    std::size_t nnz = 0;
    for (const auto& r : rows_) nnz += r.size();
    op.cols.clear();
    op.vals.clear();
    op.cols.reserve(nnz);
    op.vals.reserve(nnz);
    for (int p = 0; p < dim_; ++p) {
      auto r = rows_[static_cast<std::size_t>(p)];
      std::sort(r.begin(), r.end());
      for (const auto& e : r) {
        op.cols.push_back(e.first);
        op.vals.push_back(e.second);
      }
      op.row_offsets[static_cast<std::size_t>(p) + 1] =
          static_cast<int>(op.cols.size());
    }
  }

 private:
  int dim_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

// Adds the 1-D flux-form stencil of  scale2*(K u')' + scale1*(T u)'  along
// one coordinate direction for every line of the grid. K and T are sampled
// at face midpoints; the row belonging to node i is divided by its own cell
// weight, which keeps the weight-weighted column sums exactly telescoping
// (discrete conservation). On an interval the boundary faces carry no flux:
// the diffusive flux vanishes by the co-normal Neumann condition and the
// transport flux vanishes because the coefficient does at the endpoints.
template <class Coeff>
void add_direction(CsrBuilder& bld, const Grid1D& g, int stride, int line_count,
                   int line_stride, Coeff&& coeff, double scale2, double scale1) {
  const double h = g.h;
  const int n = g.n;
  for (int face = 0; face < (g.periodic() ? n : n - 1); ++face) {
    // face between node `face` and node `face+1` (wrapped)
    int left = face;
    int right = (face + 1) % n;
    double mid = g.node(face) + 0.5 * h;
    auto [K, T] = coeff(mid);
    double D = scale2 * K / h;     // diffusive flux coefficient
    double Tc = 0.5 * scale1 * T;  // centered transport flux coefficient
    double wl = g.cell_measure(left);
    double wr = g.cell_measure(right);
    for (int line = 0; line < line_count; ++line) {
      int pl = line * line_stride + left * stride;
      int pr = line * line_stride + right * stride;
      // flux F = D*(u_r - u_l) + Tc*(u_l + u_r) enters row l with +1/wl
      // and row r with -1/wr
      bld.add(pl, pr, (D + Tc) / wl);
      bld.add(pl, pl, (-D + Tc) / wl);
      bld.add(pr, pl, (D - Tc) / wr);
      bld.add(pr, pr, (-D - Tc) / wr);
    }
  }
}

}  // namespace detail

// Discretization of  eps^2 d_y(A d_y u) + eps d_y(B u) + d_z(a d_z u)
//                    + d_z(b u) + c u
// on the tensor grid, with torus wrap or zero-co-normal-flux ends.
inline SparseOperator assemble_global(const Grid2D& grid,
                                      const CoefficientSet& coeffs,
                                      double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  coeffs.validate(grid);

  const int ny = grid.gy.n, nz = grid.gz.n;
  detail::CsrBuilder bld(grid.size());

  // y-direction: stride nz between y-neighbors, one line per z-node
  detail::add_direction(
      bld, grid.gy, nz, nz, 1,
      [&](double ymid) {
        return std::pair<double, double>{coeffs.A.eval(ymid, 0.0),
                                         coeffs.B.eval(ymid, 0.0)};
      },
      eps * eps, eps);
  // z-direction: stride 1, one line per y-node
  detail::add_direction(
      bld, grid.gz, 1, ny, nz,
      [&](double zmid) {
        return std::pair<double, double>{coeffs.a.eval(0.0, zmid),
                                         coeffs.b.eval(0.0, zmid)};
      },
      1.0, 1.0);

  SparseOperator op;
  op.ny = ny;
  op.nz = nz;
  op.ydom = grid.gy.domain;
  op.zdom = grid.gz.domain;
  op.local = false;
  op.eps = eps;
  op.weights = grid.weights();
  op.c_min = std::numeric_limits<double>::infinity();
  op.c_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < ny; ++i) {
    for (int j = 0; j < nz; ++j) {
      double cij = coeffs.c.eval(grid.gy.node(i), grid.gz.node(j));
      bld.add(grid.idx(i, j), grid.idx(i, j), cij);
      op.c_min = std::min(op.c_min, cij);
      op.c_max = std::max(op.c_max, cij);
    }
  }
  bld.finish(op);
  return op;
}

// z-only operator  d_z(a d_z u) + d_z(b u) + c(y0,.) u  at frozen y0.
inline SparseOperator assemble_local(const Grid1D& gz,
                                     const CoefficientSet& coeffs, double y0) {
  if (y0 < 0.0 || y0 > 1.0)
    throw InvalidArgument("y0 = " + std::to_string(y0) +
                          " outside the closed y-domain");
  if (coeffs.a.depends_on(Expr::Var::Y) || coeffs.b.depends_on(Expr::Var::Y))
    throw InvalidArgument("a and b may depend on z only");
  for (int j = 0; j < gz.n; ++j) {
    double zm = gz.node(j) + 0.5 * gz.h;
    bool has_face = gz.periodic() || j < gz.n - 1;
    if (!(coeffs.a.eval(0.0, gz.node(j)) > 0.0) ||
        (has_face && !(coeffs.a.eval(0.0, zm) > 0.0)))
      throw NumericalError("ellipticity violation: a must be positive");
  }
  if (gz.domain == Domain1D::Interval &&
      (std::fabs(coeffs.b.eval(0.0, 0.0)) > 1e-12 ||
       std::fabs(coeffs.b.eval(0.0, 1.0)) > 1e-12))
    throw NumericalError(
        "boundary-flux violation: b must vanish at the ends of the z-interval");

  detail::CsrBuilder bld(gz.n);
  detail::add_direction(
      bld, gz, 1, 1, 0,
      [&](double zmid) {
        return std::pair<double, double>{coeffs.a.eval(0.0, zmid),
                                         coeffs.b.eval(0.0, zmid)};
      },
      1.0, 1.0);

  SparseOperator op;
  op.ny = 1;
  op.nz = gz.n;
  op.ydom = Domain1D::Torus;
  op.zdom = gz.domain;
  op.local = true;
  op.eps = 0.0;
  op.weights.resize(static_cast<std::size_t>(gz.n));
  op.c_min = std::numeric_limits<double>::infinity();
  op.c_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < gz.n; ++j) {
    op.weights[static_cast<std::size_t>(j)] = gz.cell_measure(j);
    double cj = coeffs.c.eval(y0, gz.node(j));
    bld.add(j, j, cj);
    op.c_min = std::min(op.c_min, cj);
    op.c_max = std::max(op.c_max, cj);
  }
  bld.finish(op);
  return op;
}

// Weight-weighted adjoint: L*_{pq} = w_q L_{qp} / w_p. Same weights and
// metadata; discretizes the backward operator (diffusion minus transport).
inline SparseOperator weighted_adjoint(const SparseOperator& op) {
  detail::CsrBuilder bld(op.dim);
  for (int q = 0; q < op.dim; ++q) {
    for (int t = op.row_offsets[q]; t < op.row_offsets[q + 1]; ++t) {
      int p = op.cols[static_cast<std::size_t>(t)];
      bld.add(p, q,
              op.weights[static_cast<std::size_t>(q)] *
                  op.vals[static_cast<std::size_t>(t)] /
                  op.weights[static_cast<std::size_t>(p)]);
    }
  }
  SparseOperator out = op;
  bld.finish(out);
  return out;
}

// One line per nonzero, "row col value" with 17 significant digits,
// row-major with ascending columns.
inline void dump_matrix(const SparseOperator& op, std::ostream& os) {
  char buf[64];
  for (int p = 0; p < op.dim; ++p) {
    for (int t = op.row_offsets[p]; t < op.row_offsets[p + 1]; ++t) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", p,
                    op.cols[static_cast<std::size_t>(t)],
                    op.vals[static_cast<std::size_t>(t)]);
      os << buf;
    }
  }
}

}  // namespace anisoeig
