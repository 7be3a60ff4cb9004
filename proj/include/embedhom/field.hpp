#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "embedhom/error.hpp"
#include "embedhom/matrix.hpp"

namespace embedhom {

struct ConstantField {
  SymMatrix value;
};

// Unit-periodic checkerboard made of squares (intervals in 1D) of side period/2.
// Phase 0 where the sum of floor(2 u_k / period) is even, u = x reduced mod period.
struct CheckerboardField {
  SymMatrix phase0;
  SymMatrix phase1;
  double period = 1.0;
};

struct Inclusion {
  std::array<double, 2> center{};
  double radius = 0.0;
  SymMatrix matrix;
};

// Disjoint balls (intervals in 1D) in a uniform matrix.
struct InclusionField {
  std::vector<Inclusion> inclusions;
  SymMatrix matrix_ext;
  double generation_radius = 0.0;
};

// 1D piecewise-constant profile: values[k] on [breakpoints[k], breakpoints[k+1]).
// values.size() == breakpoints.size() + 1; the first and last values extend to
// -inf and +inf. With a period, the profile on [origin, origin + period) repeats.
struct PiecewiseField1D {
  std::vector<double> breakpoints;
  std::vector<double> values;
  std::optional<double> period;
  double origin = 0.0;
};

/// A deterministic map x -> A(x) with values in the ellipticity class.
class CoefficientField {
 public:
  using Kind = std::variant<ConstantField, CheckerboardField, InclusionField, PiecewiseField1D>;

  CoefficientField(int dim, Kind kind, EllipticityBounds bounds);

  static CoefficientField constant(const SymMatrix& a, EllipticityBounds bounds);
  static CoefficientField checkerboard(int dim, double a0, double a1, EllipticityBounds bounds,
                                       double period = 1.0);

  int dim() const { return dim_; }
  const EllipticityBounds& bounds() const { return bounds_; }
  const Kind& kind() const { return kind_; }
  std::string kind_name() const;

  SymMatrix eval(std::span<const double> x) const;

  // Inclusion fields only: keep the inclusions lying entirely inside (-n, n)^d.
  CoefficientField restricted_to_box(double half_width) const;

 private:
  void build_buckets();
  void validate() const;

  int dim_;
  Kind kind_;
  EllipticityBounds bounds_;

  // Spatial hash over inclusions, built once; shared so copies stay cheap.
  struct Buckets {
    double cell = 1.0;
    double lo = 0.0;
    int n = 0;
    std::vector<std::vector<int>> items;
  };
  std::shared_ptr<const Buckets> buckets_;
};

/// Evaluate the field at a point; throws on dimension mismatch.
SymMatrix field_eval(const CoefficientField& field, std::span<const double> x);

struct InclusionSpec {
  int dim = 2;
  std::uint64_t seed = 0;
  double volume_fraction_target = 0.0;
  double radius_min = 0.5;
  double radius_max = 0.5;
  SymMatrix inclusion_matrix;
  SymMatrix matrix_ext;
  double generation_radius = 1.0;
  EllipticityBounds bounds;
};

// Thrown when the rejection cap is hit before the target fraction.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, double achieved) : Error(what), achieved_(achieved) {}
  double achieved_fraction() const { return achieved_; }

 private:
  double achieved_;
};

inline constexpr int kMaxConsecutiveRejections = 100000;

/// Random sequential adsorption of disjoint balls inside the generation ball.
CoefficientField generate_inclusions(const InclusionSpec& spec);

/// Volume of the inclusions over the volume of the generation ball.
double inclusion_volume_fraction(const InclusionField& f, int dim);

}  // namespace embedhom
