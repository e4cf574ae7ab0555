#pragma once

#include <string>
#include <vector>

#include "anisoeig/errors.hpp"

namespace anisoeig {

// Domains are normalized to unit length: the torus is R/Z and the interval
// is [0,1]. A torus grid has n cells of width h = 1/n with node i at i*h and
// wrap-around neighbors; an interval grid has n nodes at i*h with
// h = 1/(n-1) and half cells at the two Neumann endpoints.
enum class Domain1D { Torus, Interval };

inline const char* domain_name(Domain1D d) {
  return d == Domain1D::Torus ? "torus" : "interval";
}

struct Grid1D {
  Domain1D domain = Domain1D::Torus;
  int n = 0;
  double h = 0.0;
  std::vector<double> nodes;

  double node(int i) const { return nodes[static_cast<std::size_t>(i)]; }

  bool periodic() const { return domain == Domain1D::Torus; }

  // Trapezoid cell weight; weights sum to 1 on both domain kinds.
  double cell_measure(int i) const {
    if (i < 0 || i >= n)
      throw InvalidArgument("grid index " + std::to_string(i) +
                            " out of range [0," + std::to_string(n) + ")");
    if (periodic()) return h;
    return (i == 0 || i == n - 1) ? 0.5 * h : h;
  }
};

inline Grid1D build_grid(Domain1D domain, int n) {
  if (n < 4)
    throw InvalidArgument("grid needs at least 4 nodes, got " +
                          std::to_string(n));
  Grid1D g;
  g.domain = domain;
  g.n = n;
  g.h = (domain == Domain1D::Torus) ? 1.0 / n : 1.0 / (n - 1);
  g.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.nodes[static_cast<std::size_t>(i)] = i * g.h;
  return g;
}

// Tensor grid; y is the slow variable, z the fast one. Fields over the grid
// are flattened with idx(i,j) = i*gz.n + j.
struct Grid2D {
  Grid1D gy, gz;

  Grid2D(Grid1D y, Grid1D z) : gy(std::move(y)), gz(std::move(z)) {
    if (gy.domain != Domain1D::Torus && gz.domain != Domain1D::Torus)
      throw InvalidArgument("at least one of the two domains must be a torus");
  }

  int size() const { return gy.n * gz.n; }
  int idx(int i, int j) const { return i * gz.n + j; }

  // Product cell weight w(i,j) = wy(i)*wz(j); sums to 1.
  double weight(int i, int j) const {
    return gy.cell_measure(i) * gz.cell_measure(j);
  }

  std::vector<double> weights() const {
    std::vector<double> w(static_cast<std::size_t>(size()));
    for (int i = 0; i < gy.n; ++i) {
      double wy = gy.cell_measure(i);
      for (int j = 0; j < gz.n; ++j)
        w[static_cast<std::size_t>(idx(i, j))] = wy * gz.cell_measure(j);
    }
    return w;
  }
};

}  // namespace anisoeig
