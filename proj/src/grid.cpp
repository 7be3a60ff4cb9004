#include "embedhom/grid.hpp"

#include <cmath>

#include "embedhom/error.hpp"

namespace embedhom {

namespace {

int checked_cell_count(double half_width, int cells_per_unit, const char* what) {
  const double cells = 2.0 * half_width * cells_per_unit;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) || rounded < 1) {
    throw Error(std::string(what) + ": 2 * half-width * cells_per_unit must be a positive integer");
  }
  return static_cast<int>(rounded);
}

}  // namespace

Grid Grid::make(int dim, double L, int cells_per_unit, double R, Boundary boundary) {
  if (dim != 1 && dim != 2) throw Error("only dimensions 1 and 2 are supported");
  if (cells_per_unit < 1) throw Error("cells_per_unit must be positive");
  if (!(R > 0.0)) throw Error("embedding radius R must be positive");
  if (L < 2.0 * R * (1 - 1e-12)) throw Error("grid: box half-width L must be at least 2R");
  if (R < 4.0 / cells_per_unit * (1 - 1e-12)) throw Error("grid: R must be at least 4h");
  Grid g;
  g.dim = dim;
  g.L = L;
  g.cells_per_unit = cells_per_unit;
  g.R = R;
  g.boundary = boundary;
  g.n_ = checked_cell_count(L, cells_per_unit, "grid");
  return g;
}

PeriodicGrid PeriodicGrid::make(int dim, double N, int cells_per_unit) {
  if (dim != 1 && dim != 2) throw Error("only dimensions 1 and 2 are supported");
  if (cells_per_unit < 1) throw Error("cells_per_unit must be positive");
  if (!(N > 0.0)) throw Error("supercell half-width N must be positive");
  PeriodicGrid g;
  g.dim = dim;
  g.N = N;
  g.cells_per_unit = cells_per_unit;
  g.n_ = checked_cell_count(N, cells_per_unit, "periodic grid");
  if (g.n_ < 2) throw Error("periodic grid needs at least two cells per axis");
  return g;
}

std::vector<double> StencilOperator::diagonal() const {
  std::vector<double> d(size(), 0.0);
  const int rows = dim == 1 ? 1 : n;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * n + i;
      d[c] = tx[static_cast<std::size_t>(j) * (n + 1) + i] + tx[static_cast<std::size_t>(j) * (n + 1) + i + 1];
      if (dim == 2) d[c] += ty[static_cast<std::size_t>(j) * n + i] + ty[static_cast<std::size_t>(j + 1) * n + i];
    }
  }
  return d;
}

}  // namespace embedhom
