#pragma once

#include <array>
#include <span>
#include <string>

namespace embedhom {

/// Uniform ellipticity class: symmetric matrices with spectrum in [alpha, beta].
struct EllipticityBounds {
  double alpha = 1.0;
  double beta = 1.0;

  EllipticityBounds() = default;
  EllipticityBounds(double alpha_, double beta_);

  double width() const { return beta - alpha; }
  double midpoint() const { return 0.5 * (alpha + beta); }
};

/// Small symmetric matrix of dimension 1 or 2, stored dense row-major.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);

  static SymMatrix identity(int dim) { return scalar(dim, 1.0); }
  static SymMatrix scalar(int dim, double a);
  static SymMatrix diagonal(std::span<const double> diag);
  // Throws if the 2x2 input is not symmetric within 1e-12 (relative).
  static SymMatrix from_rows(int dim, std::span<const double> entries);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return a_[i * 2 + j]; }
  void set(int i, int j, double v);

  double trace() const;
  bool is_diagonal(double tol = 1e-14) const;
  // Ascending eigenvalues; only the first dim() entries are meaningful.
  std::array<double, 2> eigenvalues() const;
  bool in_class(const EllipticityBounds& b, double slack = 1e-12) const;
  double quad(std::span<const double> p) const;
  double max_abs_diff(const SymMatrix& o) const;

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

  std::string str() const;

 private:
  int dim_ = 1;
  std::array<double, 4> a_{};
};

/// Eigen-decompose, clamp the spectrum into [alpha, beta], recompose.
SymMatrix spd_project(const SymMatrix& m, const EllipticityBounds& bounds);

}  // namespace embedhom
