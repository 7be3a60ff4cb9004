#include "embedhom/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "embedhom/rng.hpp"

namespace embedhom {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double ball_volume(int dim, double r) { return dim == 1 ? 2.0 * r : std::numbers::pi * r * r; }

double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

void check_member(const SymMatrix& m, int dim, const EllipticityBounds& b, const char* what) {
  if (m.dim() != dim) throw Error(std::string(what) + ": matrix dimension does not match field dimension");
  if (!m.in_class(b)) throw Error(std::string(what) + ": matrix " + m.str() + " outside the ellipticity bounds");
}

}  // namespace

CoefficientField::CoefficientField(int dim, Kind kind, EllipticityBounds bounds)
    : dim_(dim), kind_(std::move(kind)), bounds_(bounds) {
  if (dim != 1 && dim != 2) throw Error("only dimensions 1 and 2 are supported");
  validate();
  build_buckets();
}

CoefficientField CoefficientField::constant(const SymMatrix& a, EllipticityBounds bounds) {
  return CoefficientField(a.dim(), ConstantField{a}, bounds);
}

CoefficientField CoefficientField::checkerboard(int dim, double a0, double a1, EllipticityBounds bounds,
                                                double period) {
  return CoefficientField(dim, CheckerboardField{SymMatrix::scalar(dim, a0), SymMatrix::scalar(dim, a1), period},
                          bounds);
}

std::string CoefficientField::kind_name() const {
  return std::visit(overloaded{[](const ConstantField&) { return std::string("constant"); },
                               [](const CheckerboardField&) { return std::string("checkerboard"); },
                               [](const InclusionField&) { return std::string("inclusions"); },
                               [](const PiecewiseField1D&) { return std::string("piecewise_1d"); }},
                    kind_);
}

void CoefficientField::validate() const {
  std::visit(overloaded{
                 [&](const ConstantField& f) { check_member(f.value, dim_, bounds_, "constant field"); },
                 [&](const CheckerboardField& f) {
                   check_member(f.phase0, dim_, bounds_, "checkerboard phase 0");
                   check_member(f.phase1, dim_, bounds_, "checkerboard phase 1");
                   if (!(f.period > 0.0)) throw Error("checkerboard period must be positive");
                 },
                 [&](const InclusionField& f) {
                   check_member(f.matrix_ext, dim_, bounds_, "inclusion matrix_ext");
                   for (std::size_t i = 0; i < f.inclusions.size(); ++i) {
                     const auto& a = f.inclusions[i];
                     check_member(a.matrix, dim_, bounds_, "inclusion matrix");
                     if (!(a.radius > 0.0)) throw Error("inclusion radius must be positive");
                     if (std::sqrt(dist2(a.center, {0.0, 0.0}, dim_)) + a.radius > f.generation_radius * (1 + 1e-12)) {
                       throw Error("inclusion not contained in the generation ball");
                     }
                     for (std::size_t j = 0; j < i; ++j) {
                       const auto& b = f.inclusions[j];
                       const double s = a.radius + b.radius;
                       if (dist2(a.center, b.center, dim_) < s * s * (1 - 1e-12)) throw Error("inclusions overlap");
                     }
                   }
                 },
                 [&](const PiecewiseField1D& f) {
                   if (dim_ != 1) throw Error("piecewise_1d fields are one-dimensional");
                   if (f.values.size() != f.breakpoints.size() + 1) {
                     throw Error("piecewise_1d needs exactly one more value than breakpoints");
                   }
                   for (std::size_t k = 1; k < f.breakpoints.size(); ++k) {
                     if (!(f.breakpoints[k] > f.breakpoints[k - 1])) throw Error("breakpoints must increase strictly");
                   }
                   for (double v : f.values) check_member(SymMatrix::scalar(1, v), 1, bounds_, "piecewise_1d value");
                   if (f.period && !(*f.period > 0.0)) throw Error("piecewise_1d period must be positive");
                 }},
             kind_);
}

void CoefficientField::build_buckets() {
  const auto* f = std::get_if<InclusionField>(&kind_);
  if (f == nullptr || f->inclusions.empty()) return;
  double rmax = 0.0;
  for (const auto& inc : f->inclusions) rmax = std::max(rmax, inc.radius);
  auto b = std::make_shared<Buckets>();
  b->cell = 2.0 * rmax;
  b->lo = -f->generation_radius;
  b->n = std::max(1, static_cast<int>(std::ceil(2.0 * f->generation_radius / b->cell)));
  const int ny = dim_ == 2 ? b->n : 1;
  b->items.resize(static_cast<std::size_t>(b->n) * ny);
  const auto index = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - b->lo) / b->cell)), 0, b->n - 1); };
  for (int i = 0; i < static_cast<int>(f->inclusions.size()); ++i) {
    const auto& inc = f->inclusions[i];
    const int x0 = index(inc.center[0] - inc.radius), x1 = index(inc.center[0] + inc.radius);
    const int y0 = dim_ == 2 ? index(inc.center[1] - inc.radius) : 0;
    const int y1 = dim_ == 2 ? index(inc.center[1] + inc.radius) : 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) b->items[static_cast<std::size_t>(y) * b->n + x].push_back(i);
  }
  buckets_ = std::move(b);
}

SymMatrix CoefficientField::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw Error("point dimension does not match field dimension");
  return std::visit(
      overloaded{
          [&](const ConstantField& f) { return f.value; },
          [&](const CheckerboardField& f) {
            int parity = 0;
            for (int k = 0; k < dim_; ++k) {
              const double u = x[k] - f.period * std::floor(x[k] / f.period);
              parity += static_cast<int>(std::floor(2.0 * u / f.period));
            }
            return parity % 2 == 0 ? f.phase0 : f.phase1;
          },
          [&](const InclusionField& f) {
            if (!buckets_) return f.matrix_ext;
            const auto& b = *buckets_;
            std::array<double, 2> p{x[0], dim_ == 2 ? x[1] : 0.0};
            int cell[2] = {0, 0};
            for (int k = 0; k < dim_; ++k) {
              const double t = std::floor((p[k] - b.lo) / b.cell);
              if (t < 0 || t >= b.n) return f.matrix_ext;
              cell[k] = static_cast<int>(t);
            }
            for (int i : b.items[static_cast<std::size_t>(cell[1]) * b.n + cell[0]]) {
              const auto& inc = f.inclusions[i];
              if (dist2(p, inc.center, dim_) < inc.radius * inc.radius) return inc.matrix;
            }
            return f.matrix_ext;
          },
          [&](const PiecewiseField1D& f) {
            double t = x[0];
            if (f.period) t = f.origin + (t - f.origin) - *f.period * std::floor((t - f.origin) / *f.period);
            const auto it = std::upper_bound(f.breakpoints.begin(), f.breakpoints.end(), t);
            return SymMatrix::scalar(1, f.values[static_cast<std::size_t>(it - f.breakpoints.begin())]);
          }},
      kind_);
}

CoefficientField CoefficientField::restricted_to_box(double half_width) const {
  const auto* f = std::get_if<InclusionField>(&kind_);
  if (f == nullptr) return *this;
  InclusionField g;
  g.matrix_ext = f->matrix_ext;
  g.generation_radius = f->generation_radius;
  for (const auto& inc : f->inclusions) {
    bool inside = true;
    for (int k = 0; k < dim_; ++k) inside = inside && std::abs(inc.center[k]) + inc.radius <= half_width;
    if (inside) g.inclusions.push_back(inc);
  }
  return CoefficientField(dim_, std::move(g), bounds_);
}

SymMatrix field_eval(const CoefficientField& field, std::span<const double> x) { return field.eval(x); }

double inclusion_volume_fraction(const InclusionField& f, int dim) {
  double v = 0.0;
  for (const auto& inc : f.inclusions) v += ball_volume(dim, inc.radius);
  return v / ball_volume(dim, f.generation_radius);
}

CoefficientField generate_inclusions(const InclusionSpec& spec) {
  const int dim = spec.dim;
  if (dim != 1 && dim != 2) throw Error("only dimensions 1 and 2 are supported");
  if (!(spec.volume_fraction_target >= 0.0 && spec.volume_fraction_target < 1.0)) {
    throw Error("volume_fraction_target must lie in [0, 1)");
  }
  if (!(spec.radius_min > 0.0 && spec.radius_min <= spec.radius_max)) {
    throw Error("radii must satisfy 0 < radius_min <= radius_max");
  }
  if (!(spec.generation_radius > spec.radius_min)) throw Error("generation_radius too small for the radii");

  CounterRng rng(spec.seed);
  InclusionField field;
  field.matrix_ext = spec.matrix_ext;
  field.generation_radius = spec.generation_radius;

  const double ball = ball_volume(dim, spec.generation_radius);
  double covered = 0.0;
  int rejections = 0;
  const double rg = spec.generation_radius;
  while (covered / ball < spec.volume_fraction_target) {
    std::array<double, 2> c{};
    double r2 = 0.0;
    do {
      r2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        c[k] = rng.uniform(-rg, rg);
        r2 += c[k] * c[k];
      }
    } while (r2 >= rg * rg);
    const double r = spec.radius_min == spec.radius_max ? spec.radius_min : rng.uniform(spec.radius_min, spec.radius_max);

    bool ok = std::sqrt(r2) + r <= rg;
    for (std::size_t j = 0; ok && j < field.inclusions.size(); ++j) {
      const double s = r + field.inclusions[j].radius;
      ok = dist2(c, field.inclusions[j].center, dim) >= s * s;
    }
    if (!ok) {
      if (++rejections >= kMaxConsecutiveRejections) {
        throw GenerationError("inclusion target fraction unreachable: achieved " + std::to_string(covered / ball),
                              covered / ball);
      }
      continue;
    }
    rejections = 0;
    field.inclusions.push_back(Inclusion{c, r, spec.inclusion_matrix});
    covered += ball_volume(dim, r);
  }
  return CoefficientField(dim, std::move(field), spec.bounds);
}

}  // namespace embedhom
