#include "embedhom/corrector.hpp"

#include <cmath>
#include <string>

#include "embedhom/error.hpp"
#include "embedhom/kernels.hpp"

namespace embedhom {

namespace {

// Visits every face as (axis, low cell, high cell, transmissibility); a ghost
// side across the box boundary is reported as -1.
template <class Fn>
void for_each_face(const StencilOperator& op, Fn&& fn) {
  const int n = op.n;
  const long nx = n + 1;
  const int rows = op.dim == 1 ? 1 : n;
  for (int j = 0; j < rows; ++j) {
    const long row = static_cast<long>(j) * n;
    for (int i = 0; i <= n; ++i) fn(0, i > 0 ? row + i - 1 : -1L, i < n ? row + i : -1L, op.tx[j * nx + i]);
  }
  if (op.dim == 1) return;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i < n; ++i) {
      fn(1, j > 0 ? static_cast<long>(j - 1) * n + i : -1L, j < n ? static_cast<long>(j) * n + i : -1L,
         op.ty[static_cast<std::size_t>(j) * n + i]);
    }
  }
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

double transmissibility_scale(const Grid& g) { return std::pow(g.h(), g.dim - 2); }

double value_at(std::span<const double> v, long c) { return c >= 0 ? v[static_cast<std::size_t>(c)] : 0.0; }

}  // namespace

FieldSample sample_field(const CoefficientField& field, const Grid& grid) {
  if (field.dim() != grid.dim) throw Error("field dimension does not match grid dimension");
  FieldSample s;
  s.grid = grid;
  s.bounds = field.bounds();
  const std::size_t cells = grid.num_cells();
  s.inside.assign(cells, 0);
  s.unit_ball.assign(cells, 0);
  for (int a = 0; a < grid.dim; ++a) s.k[a].assign(cells, 0.0);
  const int n = grid.n();
  const int rows = grid.dim == 1 ? 1 : n;
  const double r2 = grid.R * grid.R;
  SymMatrix sum = SymMatrix(grid.dim) * 0.0;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * n + i;
      double x[2] = {grid.center(i), grid.dim == 2 ? grid.center(j) : 0.0};
      const double d2 = x[0] * x[0] + x[1] * x[1];
      s.unit_ball[c] = d2 < 1.0;
      if (d2 >= r2) continue;
      const SymMatrix m = field.eval(std::span<const double>(x, grid.dim));
      if (!m.is_diagonal(1e-14 * std::max(1.0, m.trace()))) {
        throw Error("field value " + m.str() + " is not diagonal; two-point fluxes need axis-aligned coefficients");
      }
      s.inside[c] = 1;
      ++s.cells_inside;
      for (int a = 0; a < grid.dim; ++a) s.k[a][c] = m(a, a);
      sum = sum + m;
    }
  }
  if (s.cells_inside == 0) throw Error("no cell center lies inside B_R");
  s.inside_mean = sum * (1.0 / s.cells_inside);
  return s;
}

DiscreteSystem assemble(const FieldSample& sample, const SymMatrix& exterior) {
  const Grid& g = sample.grid;
  if (exterior.dim() != g.dim) throw Error("exterior matrix dimension does not match grid");
  if (!exterior.is_diagonal()) throw Error("exterior matrix must be diagonal for two-point fluxes");
  if (!exterior.in_class(sample.bounds)) throw Error("exterior matrix " + exterior.str() + " outside the ellipticity bounds");

  DiscreteSystem sys;
  sys.grid = g;
  sys.bounds = sample.bounds;
  sys.exterior = exterior;
  sys.inside = sample.inside;
  sys.unit_ball = sample.unit_ball;
  sys.cells_inside = sample.cells_inside;
  sys.ball_measure = sample.cells_inside * std::pow(g.h(), g.dim);

  const std::size_t cells = g.num_cells();
  for (int a = 0; a < g.dim; ++a) {
    sys.k[a].resize(cells);
    for (std::size_t c = 0; c < cells; ++c) sys.k[a][c] = sample.inside[c] ? sample.k[a][c] : exterior(a, a);
  }

  const int n = g.n();
  const double s = transmissibility_scale(g);
  const bool dirichlet = g.boundary == Boundary::dirichlet;
  StencilOperator& op = sys.op;
  op.dim = g.dim;
  op.n = n;
  op.tx.assign(static_cast<std::size_t>(n + 1) * (g.dim == 1 ? 1 : n), 0.0);
  if (g.dim == 2) op.ty.assign(static_cast<std::size_t>(n + 1) * n, 0.0);

  const auto face_value = [&](int axis, long lo, long hi) {
    const auto& k = sys.k[axis];
    if (lo >= 0 && hi >= 0) return s * harmonic(k[lo], k[hi]);
    return dirichlet ? 2.0 * s * k[lo >= 0 ? lo : hi] : 0.0;
  };
  const int rows = g.dim == 1 ? 1 : n;
  for (int j = 0; j < rows; ++j) {
    const long row = static_cast<long>(j) * n;
    for (int i = 0; i <= n; ++i) {
      op.tx[static_cast<std::size_t>(j) * (n + 1) + i] = face_value(0, i > 0 ? row + i - 1 : -1, i < n ? row + i : -1);
    }
  }
  if (g.dim == 2) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i < n; ++i) {
        op.ty[static_cast<std::size_t>(j) * n + i] =
            face_value(1, j > 0 ? static_cast<long>(j - 1) * n + i : -1, j < n ? static_cast<long>(j) * n + i : -1);
      }
    }
  }
  return sys;
}

DiscreteSystem assemble(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid) {
  return assemble(sample_field(field, grid), exterior);
}

std::vector<double> corrector_rhs(const DiscreteSystem& sys, std::span<const double> p) {
  std::vector<double> b(sys.size(), 0.0);
  const double s = transmissibility_scale(sys.grid);
  const double h = sys.grid.h();
  for_each_face(sys.op, [&](int axis, long lo, long hi, double tau) {
    if (lo < 0 || hi < 0) return;
    const double flux = (s * sys.exterior(axis, axis) - tau) * p[axis] * h;
    b[hi] += flux;
    b[lo] -= flux;
  });
  return b;
}

std::unique_ptr<Preconditioner> make_preconditioner(const DiscreteSystem& sys, const SolverOptions& opts) {
  if (opts.preconditioner == PreconditionerKind::jacobi) return std::make_unique<JacobiPreconditioner>(sys.op);
  const double coef[2] = {sys.exterior(0, 0), sys.grid.dim == 2 ? sys.exterior(1, 1) : 0.0};
  return std::make_unique<SpectralPreconditioner>(
      sys.grid.dim, sys.grid.n(), sys.grid.h(),
      sys.grid.boundary == Boundary::neumann ? SpectralBoundary::neumann : SpectralBoundary::dirichlet,
      std::span<const double>(coef, sys.grid.dim));
}

namespace {

CorrectorSolution solve_with(const DiscreteSystem& sys, const Preconditioner& m, std::span<const double> p,
                             const SolverOptions& opts, std::span<const double> guess) {
  if (static_cast<int>(p.size()) != sys.grid.dim) throw Error("direction p has the wrong dimension");
  double pn = 0.0;
  for (double x : p) pn += x * x;
  if (!(pn > 0.0)) throw Error("direction p must be nonzero");

  CorrectorSolution sol;
  for (int a = 0; a < sys.grid.dim; ++a) sol.p[a] = p[a];
  const auto b = corrector_rhs(sys, p);
  sol.values.assign(sys.size(), 0.0);
  if (guess.size() == sys.size()) {
    // Scale the guess to minimize the quadratic energy along it; drop it if
    // that does not beat the zero start (rhs much smaller than the guess).
    std::vector<double> kx(sys.size());
    kernels::apply(opts.backend, sys.op, guess, kx);
    const double xkx = kernels::dot(opts.backend, guess, kx);
    const double bx = kernels::dot(opts.backend, b, guess);
    if (xkx > 0.0 && bx != 0.0) {
      const double scale = bx / xkx;
      double r2 = 0.0, b2 = 0.0;
      for (std::size_t c = 0; c < b.size(); ++c) {
        const double r = b[c] - scale * kx[c];
        r2 += r * r;
        b2 += b[c] * b[c];
      }
      if (r2 < b2) {
        for (std::size_t c = 0; c < b.size(); ++c) sol.values[c] = scale * guess[c];
      }
    }
  }
  const SolveStats st = pcg(sys.op, m, b, sol.values, opts);
  sol.residual = st.residual;
  sol.iterations = st.iterations;

  if (sys.grid.boundary == Boundary::neumann) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t c = 0; c < sys.size(); ++c) {
      if (sys.unit_ball[c]) {
        sum += sol.values[c];
        ++count;
      }
    }
    if (count > 0) {
      const double mean = sum / count;
      for (double& v : sol.values) v -= mean;
    }
  }
  return sol;
}

}  // namespace

CorrectorSolution solve_corrector(const DiscreteSystem& sys, std::span<const double> p, const SolverOptions& opts,
                                  std::span<const double> guess) {
  const auto m = make_preconditioner(sys, opts);
  return solve_with(sys, *m, p, opts, guess);
}

double energy_functional(const DiscreteSystem& sys, std::span<const double> p, std::span<const double> v) {
  if (v.size() != sys.size()) throw Error("energy_functional: field size does not match the grid");
  const double s = transmissibility_scale(sys.grid);
  const double h = sys.grid.h();
  double sum = sys.ball_measure * sys.exterior.quad(p);
  // Whole-box energy of p.x + v minus the exterior reference energy and the
  // (divergence-free) flux of the uniform field A p.
  for_each_face(sys.op, [&](int axis, long lo, long hi, double tau) {
    const double d = value_at(v, hi) - value_at(v, lo);
    const double tau_ref = (lo >= 0 && hi >= 0) ? s * sys.exterior(axis, axis) : tau;
    const double g = p[axis] * h;
    sum += (tau - tau_ref) * g * (g + 2.0 * d) + tau * d * d;
  });
  return sum / (2.0 * sys.ball_measure);
}

double energy_at_minimizer(const DiscreteSystem& sys, const CorrectorSolution& sol) {
  const auto& v = sol.values;
  if (v.size() != sys.size()) throw Error("energy_at_minimizer: solution size does not match the grid");
  const double s = transmissibility_scale(sys.grid);
  const double h = sys.grid.h();
  const double cell_volume = std::pow(h, sys.grid.dim);
  const bool dirichlet = sys.grid.boundary == Boundary::dirichlet;

  double inner = 0.0;
  for (std::size_t c = 0; c < sys.size(); ++c) {
    if (!sys.inside[c]) continue;
    for (int a = 0; a < sys.grid.dim; ++a) inner += sys.k[a][c] * sol.p[a] * sol.p[a];
  }
  inner *= cell_volume;

  double grad = 0.0;
  for_each_face(sys.op, [&](int axis, long lo, long hi, double) {
    const auto& k = sys.k[axis];
    if (lo < 0 || hi < 0) {
      if (!dirichlet) return;
      const long c = lo >= 0 ? lo : hi;
      grad += 2.0 * s * k[c] * v[c] * v[c];
      return;
    }
    const double k1 = k[lo], k2 = k[hi];
    const double half = 0.5 * sol.p[axis] * h;
    const double u = (k1 * v[lo] + k2 * v[hi] + (k2 - k1) * half) / (k1 + k2);
    const double d1 = u - v[lo], d2 = v[hi] - u;
    grad += 2.0 * s * (k1 * d1 * d1 + k2 * d2 * d2);
  });
  return (inner - grad) / (2.0 * sys.ball_measure);
}

GEvaluation evaluate_g(const DiscreteSystem& sys, const SolverOptions& opts, const std::vector<CorrectorSolution>* warm) {
  const int d = sys.grid.dim;
  const auto m = make_preconditioner(sys, opts);
  GEvaluation ev;
  ev.G = SymMatrix(d);
  double diag_energy[2] = {0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    double p[2] = {0.0, 0.0};
    p[i] = 1.0;
    std::span<const double> guess;
    if (warm != nullptr && static_cast<int>(warm->size()) == d) guess = (*warm)[i].values;
    ev.solutions.push_back(solve_with(sys, *m, std::span<const double>(p, d), opts, guess));
    ev.iterations += ev.solutions.back().iterations;
    ev.residual = std::max(ev.residual, ev.solutions.back().residual);
    diag_energy[i] = energy_functional(sys, std::span<const double>(p, d), ev.solutions.back().values);
    ev.G.set(i, i, 2.0 * diag_energy[i]);
  }
  if (d == 2) {
    // Polarization with w_{e1+e2} = w_{e1} + w_{e2}.
    std::vector<double> w(sys.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = ev.solutions[0].values[c] + ev.solutions[1].values[c];
    const double p[2] = {1.0, 1.0};
    ev.G.set(0, 1, energy_functional(sys, p, w) - diag_energy[0] - diag_energy[1]);
  }
  return ev;
}

SymMatrix trace_gradient_from(const DiscreteSystem& sys, std::span<const CorrectorSolution> solutions) {
  const int d = sys.grid.dim;
  if (static_cast<int>(solutions.size()) != d) throw Error("trace gradient needs one solution per axis");
  const double s = transmissibility_scale(sys.grid);
  const double h = sys.grid.h();
  double grad[2] = {0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    const auto& w = solutions[i].values;
    grad[i] += sys.ball_measure;
    for_each_face(sys.op, [&](int axis, long lo, long hi, double) {
      if (lo < 0 || hi < 0) {
        if (sys.grid.boundary == Boundary::dirichlet) {
          const double d0 = value_at(w, hi) - value_at(w, lo);
          grad[axis] += 2.0 * s * d0 * d0;
        }
        return;
      }
      const double a = sys.exterior(axis, axis);
      const bool in_lo = sys.inside[lo], in_hi = sys.inside[hi];
      double dtau = s;  // d tau_f / d A_axis,axis
      if (in_lo && in_hi) {
        dtau = 0.0;
      } else if (in_lo || in_hi) {
        const double kc = sys.k[axis][in_lo ? lo : hi];
        dtau = s * 2.0 * kc * kc / ((kc + a) * (kc + a));
      }
      const double dw = w[hi] - w[lo];
      const double g = axis == i ? h : 0.0;
      grad[axis] += (dtau - s) * g * (g + 2.0 * dw) + dtau * dw * dw;
    });
  }
  SymMatrix out(d);
  for (int a = 0; a < d; ++a) out.set(a, a, grad[a] / sys.ball_measure);
  return out;
}

SymMatrix g_matrix(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid, const SolverOptions& opts) {
  return evaluate_g(assemble(field, exterior, grid), opts).G;
}

SymMatrix trace_g_gradient(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid,
                           const SolverOptions& opts) {
  const auto sys = assemble(field, exterior, grid);
  const auto ev = evaluate_g(sys, opts);
  return trace_gradient_from(sys, ev.solutions);
}

}  // namespace embedhom
