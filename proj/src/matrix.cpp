#include "embedhom/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "embedhom/error.hpp"

namespace embedhom {

EllipticityBounds::EllipticityBounds(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!(alpha > 0.0) || !(alpha <= beta) || !std::isfinite(beta)) {
    throw Error("ellipticity bounds must satisfy 0 < alpha <= beta < inf");
  }
}

SymMatrix::SymMatrix(int dim) : dim_(dim) {
  if (dim != 1 && dim != 2) throw Error("only dimensions 1 and 2 are supported");
}

SymMatrix SymMatrix::scalar(int dim, double a) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.a_[i * 2 + i] = a;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim_; ++i) m.a_[i * 2 + i] = diag[i];
  return m;
}

SymMatrix SymMatrix::from_rows(int dim, std::span<const double> entries) {
  if (static_cast<int>(entries.size()) != dim * dim) throw Error("matrix entry count does not match dimension");
  SymMatrix m(dim);
  if (dim == 1) {
    m.a_[0] = entries[0];
    return m;
  }
  const double scale = std::max({std::abs(entries[0]), std::abs(entries[3]), 1.0});
  if (std::abs(entries[1] - entries[2]) > 1e-12 * scale) throw Error("matrix is not symmetric");
  m.a_ = {entries[0], entries[1], entries[1], entries[3]};
  return m;
}

void SymMatrix::set(int i, int j, double v) {
  a_[i * 2 + j] = v;
  a_[j * 2 + i] = v;
}

double SymMatrix::trace() const { return dim_ == 1 ? a_[0] : a_[0] + a_[3]; }

bool SymMatrix::is_diagonal(double tol) const { return dim_ == 1 || std::abs(a_[1]) <= tol; }

std::array<double, 2> SymMatrix::eigenvalues() const {
  if (dim_ == 1) return {a_[0], a_[0]};
  const double mean = 0.5 * (a_[0] + a_[3]);
  const double half_diff = 0.5 * (a_[0] - a_[3]);
  const double rad = std::hypot(half_diff, a_[1]);
  return {mean - rad, mean + rad};
}

bool SymMatrix::in_class(const EllipticityBounds& b, double slack) const {
  const auto ev = eigenvalues();
  const double tol = slack * std::max(1.0, b.beta);
  return ev[0] >= b.alpha - tol && ev[dim_ - 1] <= b.beta + tol;
}

double SymMatrix::quad(std::span<const double> p) const {
  if (dim_ == 1) return a_[0] * p[0] * p[0];
  return a_[0] * p[0] * p[0] + 2.0 * a_[1] * p[0] * p[1] + a_[3] * p[1] * p[1];
}

double SymMatrix::max_abs_diff(const SymMatrix& o) const {
  double d = 0.0;
  for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(a_[k] - o.a_[k]));
  return d;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  SymMatrix r = *this;
  for (int k = 0; k < 4; ++k) r.a_[k] += o.a_[k];
  return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  SymMatrix r = *this;
  for (int k = 0; k < 4; ++k) r.a_[k] -= o.a_[k];
  return r;
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix r = *this;
  for (auto& v : r.a_) v *= s;
  return r;
}

std::string SymMatrix::str() const {
  std::ostringstream os;
  os.precision(10);
  if (dim_ == 1) {
    os << "[" << a_[0] << "]";
  } else {
    os << "[[" << a_[0] << ", " << a_[1] << "], [" << a_[2] << ", " << a_[3] << "]]";
  }
  return os.str();
}

SymMatrix spd_project(const SymMatrix& m, const EllipticityBounds& bounds) {
  const auto clamp = [&](double x) { return std::clamp(x, bounds.alpha, bounds.beta); };
  if (m.dim() == 1) return SymMatrix::scalar(1, clamp(m(0, 0)));

  const double scale = std::max({std::abs(m(0, 0)), std::abs(m(1, 1)), 1.0});
  if (m.is_diagonal(1e-15 * scale)) {
    const double d[2] = {clamp(m(0, 0)), clamp(m(1, 1))};
    return SymMatrix::diagonal(d);
  }
  // Jacobi rotation diagonalizing the 2x2 block.
  const double theta = 0.5 * std::atan2(2.0 * m(0, 1), m(0, 0) - m(1, 1));
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double l0 = clamp(c * c * m(0, 0) + 2.0 * c * s * m(0, 1) + s * s * m(1, 1));
  const double l1 = clamp(s * s * m(0, 0) - 2.0 * c * s * m(0, 1) + c * c * m(1, 1));
  SymMatrix r(2);
  r.set(0, 0, c * c * l0 + s * s * l1);
  r.set(1, 1, s * s * l0 + c * c * l1);
  r.set(0, 1, c * s * (l0 - l1));
  return r;
}

}  // namespace embedhom
