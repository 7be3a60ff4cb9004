#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace embedhom {

enum class Boundary { neumann, dirichlet };

/// Uniform cell-centered grid on [-L, L]^d with the embedding ball B_R.
struct Grid {
  int dim = 2;
  double L = 0.0;
  int cells_per_unit = 1;
  double R = 0.0;
  Boundary boundary = Boundary::neumann;

  // Checks L >= 2R, R >= 4h and 2 L cells_per_unit integral.
  static Grid make(int dim, double L, int cells_per_unit, double R, Boundary boundary = Boundary::neumann);

  double h() const { return 1.0 / cells_per_unit; }
  int n() const { return n_; }
  std::size_t num_cells() const { return dim == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_; }
  double center(int i) const { return -L + (i + 0.5) * h(); }

 private:
  int n_ = 0;
};

/// Periodic grid on Q_N = (-N, N)^d.
struct PeriodicGrid {
  int dim = 2;
  double N = 0.0;
  int cells_per_unit = 1;

  static PeriodicGrid make(int dim, double N, int cells_per_unit);

  double h() const { return 1.0 / cells_per_unit; }
  int n() const { return n_; }
  std::size_t num_cells() const { return dim == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_; }
  double center(int i) const { return -N + (i + 0.5) * h(); }

 private:
  int n_ = 0;
};

/// Two-point flux operator v -> sum_f tau_f (v_c - v_nb) on an n^d cell grid.
///
/// x-faces are stored as tx[j * (n + 1) + i] (face between cells i-1 and i of
/// row j), y-faces as ty[j * n + i] (face between rows j-1 and j). Boundary
/// faces (i = 0, n) couple to a zero ghost value; for a periodic operator the
/// face i = 0 joins cells n-1 and 0 and face n duplicates it.
struct StencilOperator {
  int dim = 2;
  int n = 0;
  bool periodic = false;
  std::vector<double> tx;
  std::vector<double> ty;

  std::size_t size() const { return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n; }
  std::vector<double> diagonal() const;
};

}  // namespace embedhom
