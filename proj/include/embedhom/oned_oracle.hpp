#pragma once

#include <vector>

#include "embedhom/field.hpp"
#include "embedhom/matrix.hpp"

namespace embedhom::oned {

/// Piecewise-constant profile on [-R, R]: values[k] on (breakpoints[k], breakpoints[k+1]),
/// with breakpoints.front() == -R and breakpoints.back() == R.
struct Profile1D {
  std::vector<double> breakpoints;
  std::vector<double> values;
  EllipticityBounds bounds;

  void validate() const;
  // The same profile as a field; values outside [-R, R] extend the end pieces.
  CoefficientField as_field() const;
};

/// m = (1 / 2R) * int_{-R}^{R} 1 / a(x) dx, exactly.
double inverse_mean(const Profile1D& profile, double R);

/// Closed-form G(a_ext) = 2 a_ext - a_ext^2 m of the whole-line problem: the
/// flux a(p + w') is constant and equals a_ext p because w' must be square
/// integrable outside the window.
double embedded_g_1d(const Profile1D& profile, double R, double a_ext);

struct Estimates {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

Estimates oracle_estimates_1d(const Profile1D& profile, double R);

/// Restriction of a 1D piecewise field to [-R, R].
Profile1D profile_from_field(const CoefficientField& field, double R);

}  // namespace embedhom::oned
