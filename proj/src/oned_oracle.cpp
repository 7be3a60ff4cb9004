#include "embedhom/oned_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "embedhom/error.hpp"

namespace embedhom::oned {

void Profile1D::validate() const {
  if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size()) {
    throw Error("profile needs n+1 breakpoints for n values");
  }
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    if (!(breakpoints[k] > breakpoints[k - 1])) throw Error("profile breakpoints must increase strictly");
  }
  for (double v : values) {
    if (v < bounds.alpha || v > bounds.beta) throw Error("profile value outside the ellipticity bounds");
  }
}

CoefficientField Profile1D::as_field() const {
  validate();
  PiecewiseField1D f;
  f.breakpoints.assign(breakpoints.begin() + 1, breakpoints.end() - 1);
  f.values = values;
  return CoefficientField(1, std::move(f), bounds);
}

double inverse_mean(const Profile1D& profile, double R) {
  profile.validate();
  const double tol = 1e-12 * std::max(1.0, R);
  if (profile.breakpoints.front() > -R + tol || profile.breakpoints.back() < R - tol) {
    throw Error("profile does not cover [-R, R]");
  }
  double integral = 0.0;
  for (std::size_t k = 0; k < profile.values.size(); ++k) {
    const double lo = std::max(profile.breakpoints[k], -R);
    const double hi = std::min(profile.breakpoints[k + 1], R);
    if (hi > lo) integral += (hi - lo) / profile.values[k];
  }
  return integral / (2.0 * R);
}

double embedded_g_1d(const Profile1D& profile, double R, double a_ext) {
  const double m = inverse_mean(profile, R);
  return 2.0 * a_ext - a_ext * a_ext * m;
}

Estimates oracle_estimates_1d(const Profile1D& profile, double R) {
  const double m = inverse_mean(profile, R);
  const auto& b = profile.bounds;
  Estimates e;
  // 2a - a^2 m is a concave parabola with vertex at 1/m.
  e.a1 = std::clamp(1.0 / m, b.alpha, b.beta);
  e.a2 = embedded_g_1d(profile, R, e.a1);
  // a = 2a - a^2 m has the nonzero root 1/m, a harmonic mean of values in [alpha, beta].
  e.a3 = 1.0 / m;
  return e;
}

Profile1D profile_from_field(const CoefficientField& field, double R) {
  if (field.dim() != 1) throw Error("profile_from_field needs a one-dimensional field");
  Profile1D p;
  p.bounds = field.bounds();
  std::vector<double> cuts{-R, R};
  if (const auto* pw = std::get_if<PiecewiseField1D>(&field.kind())) {
    if (pw->period) {
      const double per = *pw->period;
      const double first = std::floor((-R - pw->origin) / per);
      const double last = std::ceil((R - pw->origin) / per);
      for (double k = first; k <= last; k += 1.0) {
        const double base = pw->origin + k * per;
        cuts.push_back(base);
        for (double b : pw->breakpoints) {
          const double u = b - pw->origin - per * std::floor((b - pw->origin) / per);
          cuts.push_back(base + u);
        }
      }
    } else {
      cuts.insert(cuts.end(), pw->breakpoints.begin(), pw->breakpoints.end());
    }
  } else if (const auto* cb = std::get_if<CheckerboardField>(&field.kind())) {
    const double half = 0.5 * cb->period;
    for (double x = half * std::floor(-R / half); x <= R; x += half) cuts.push_back(x);
  } else if (const auto* inc = std::get_if<InclusionField>(&field.kind())) {
    for (const auto& i : inc->inclusions) {
      cuts.push_back(i.center[0] - i.radius);
      cuts.push_back(i.center[0] + i.radius);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> pts;
  for (double c : cuts) {
    if (c < -R || c > R) continue;
    if (pts.empty() || c - pts.back() > 1e-12) pts.push_back(c);
  }
  p.breakpoints = pts;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double mid[1] = {0.5 * (pts[k] + pts[k + 1])};
    p.values.push_back(field.eval(mid)(0, 0));
  }
  return p;
}

}  // namespace embedhom::oned
