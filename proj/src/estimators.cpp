#include "embedhom/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "embedhom/error.hpp"
#include "embedhom/supercell.hpp"

namespace embedhom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SymMatrix iso(int d, double a) { return SymMatrix::scalar(d, a); }

SymMatrix diag_of(const std::array<double, 2>& v, int d) {
  SymMatrix m(d);
  for (int i = 0; i < d; ++i) m.set(i, i, v[i]);
  return m;
}

double clamp_to(const EllipticityBounds& b, double x) { return std::clamp(x, b.alpha, b.beta); }

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::a1: return "a1";
    case EstimatorKind::a2: return "a2";
    case EstimatorKind::a3_scalar: return "a3_scalar";
    case EstimatorKind::a3_matrix: return "a3_matrix";
    case EstimatorKind::supercell: return "supercell";
  }
  return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
  for (auto k : {EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar, EstimatorKind::a3_matrix,
                 EstimatorKind::supercell}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("estimators", "unknown estimator '" + name + "'");
}

EmbeddedProblem::EmbeddedProblem(const CoefficientField& field, const Grid& grid, SolverOptions opts)
    : sample_(sample_field(field, grid)), opts_(opts) {}

EmbeddedProblem::Evaluation EmbeddedProblem::evaluate(const SymMatrix& A) {
  const auto sys = assemble(sample_, A);
  auto ev = evaluate_g(sys, opts_, warm_.empty() ? nullptr : &warm_);
  ++evaluations_;
  worst_residual_ = std::max(worst_residual_, ev.residual);
  Evaluation out{ev.G, trace_gradient_from(sys, ev.solutions)};
  warm_ = std::move(ev.solutions);
  return out;
}

// ---- A1 -------------------------------------------------------------------

namespace {

EstimatorReport a1_isotropic(EmbeddedProblem& pb, const A1Options& opts) {
  const auto& b = pb.bounds();
  const int d = pb.dim();
  const auto slope = [&](double a) { return pb.evaluate(iso(d, a)).gradient.trace(); };
  EstimatorReport rep;
  rep.estimator = EstimatorKind::a1;

  // Boundary maximizers: h is concave, so a nonpositive slope at alpha settles it.
  const double s_lo = slope(b.alpha);
  if (s_lo <= 0.0) {
    rep.matrix = iso(d, b.alpha);
    rep.note = "maximizer at alpha";
    return rep;
  }
  const double s_hi = slope(b.beta);
  if (s_hi >= 0.0) {
    rep.matrix = iso(d, b.beta);
    rep.note = "maximizer at beta";
    return rep;
  }

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double width = opts.relative_width * (b.beta - b.alpha);
  double lo = b.alpha, hi = b.beta;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = pb.trace(iso(d, x1)), f2 = pb.trace(iso(d, x2));
  int it = 0;
  while (hi - lo > width) {
    ++it;
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = pb.trace(iso(d, x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = pb.trace(iso(d, x1));
    }
  }
  // Secant on h' inside the final bracket; golden alone cannot resolve below ~sqrt(eps).
  double a = 0.5 * (lo + hi);
  const double g_lo = slope(lo), g_hi = slope(hi);
  if (g_lo > 0.0 && g_hi < 0.0) a = lo + (hi - lo) * g_lo / (g_lo - g_hi);
  rep.matrix = iso(d, a);
  rep.outer_iterations = it;
  return rep;
}

EstimatorReport a1_diagonal(EmbeddedProblem& pb, const A1Options& opts) {
  const auto& b = pb.bounds();
  const int d = pb.dim();
  EstimatorReport rep;
  rep.estimator = EstimatorKind::a1;

  std::array<double, 2> x{};
  for (int i = 0; i < d; ++i) x[i] = clamp_to(b, pb.sample().inside_mean(i, i));
  auto ev = pb.evaluate(diag_of(x, d));
  double f = ev.G.trace();
  std::array<double, 2> g{};
  for (int i = 0; i < d; ++i) g[i] = ev.gradient(i, i);

  if (opts.gradient_gate) {
    const double step = 1e-4 * b.beta;
    for (int i = 0; i < d; ++i) {
      auto xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      // One-sided near the bounds keeps the probes feasible.
      double fd;
      if (xm[i] < b.alpha) {
        fd = (pb.trace(diag_of(xp, d)) - f) / step;
      } else if (xp[i] > b.beta) {
        fd = (f - pb.trace(diag_of(xm, d))) / step;
      } else {
        fd = (pb.trace(diag_of(xp, d)) - pb.trace(diag_of(xm, d))) / (2.0 * step);
      }
      const double err = std::abs(fd - g[i]) / std::max(std::abs(fd), 1e-8);
      if (err > 1e-4 && std::abs(fd - g[i]) > 1e-7) {
        throw Error("gradient gate failed on axis " + std::to_string(i) + ": envelope " + std::to_string(g[i]) +
                    " vs finite difference " + std::to_string(fd));
      }
    }
  }

  const auto projected_norm = [&](const std::array<double, 2>& at, const std::array<double, 2>& grad) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double r = clamp_to(b, at[i] + grad[i]) - at[i];
      s += r * r;
    }
    return std::sqrt(s);
  };

  double t = 1.0;
  int it = 0;
  rep.converged = false;
  for (; it < opts.max_iterations; ++it) {
    if (projected_norm(x, g) <= opts.gradient_tol) {
      rep.converged = true;
      break;
    }
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, t *= 0.5) {
      std::array<double, 2> y{};
      double dir = 0.0;
      for (int i = 0; i < d; ++i) {
        y[i] = clamp_to(b, x[i] + t * g[i]);
        dir += g[i] * (y[i] - x[i]);
      }
      auto ey = pb.evaluate(diag_of(y, d));
      const double fy = ey.G.trace();
      if (fy >= f + 1e-4 * dir) {
        x = y;
        f = fy;
        for (int i = 0; i < d; ++i) g[i] = ey.gradient(i, i);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error("line search failed after " + std::to_string(opts.max_halvings) + " halvings");
    t = std::min(1.0, 2.0 * t);
  }
  if (!rep.converged && projected_norm(x, g) <= opts.gradient_tol) rep.converged = true;
  rep.matrix = diag_of(x, d);
  rep.outer_iterations = it;
  if (!rep.converged) rep.note = "iteration cap reached";
  return rep;
}

}  // namespace

EstimatorReport estimate_a1(EmbeddedProblem& problem, const A1Options& opts) {
  const auto t0 = Clock::now();
  auto rep = opts.space == SearchSpace::isotropic ? a1_isotropic(problem, opts) : a1_diagonal(problem, opts);
  rep.R = problem.grid().R;
  rep.inner_residual = problem.worst_residual();
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

EstimatorReport estimate_a1(const CoefficientField& field, const Grid& grid, const A1Options& opts,
                            const SolverOptions& solver) {
  EmbeddedProblem pb(field, grid, solver);
  return estimate_a1(pb, opts);
}

// ---- A2 -------------------------------------------------------------------

EstimatorReport estimate_a2(EmbeddedProblem& problem, const A1Options& opts, const EstimatorReport* a1) {
  const auto t0 = Clock::now();
  EstimatorReport first = a1 != nullptr ? *a1 : estimate_a1(problem, opts);
  EstimatorReport rep = first;
  rep.estimator = EstimatorKind::a2;
  rep.matrix = problem.g(first.matrix);
  rep.inner_residual = problem.worst_residual();
  rep.wall_seconds = seconds_since(t0) + (a1 != nullptr ? a1->wall_seconds : 0.0);
  return rep;
}

EstimatorReport estimate_a2(const CoefficientField& field, const Grid& grid, const A1Options& opts,
                            const SolverOptions& solver) {
  EmbeddedProblem pb(field, grid, solver);
  return estimate_a2(pb, opts);
}

// ---- A3 -------------------------------------------------------------------

EstimatorReport estimate_a3_isotropic(EmbeddedProblem& pb, const A3ScalarOptions& opts) {
  const auto t0 = Clock::now();
  const auto& b = pb.bounds();
  const int d = pb.dim();
  const auto f = [&](double a) { return pb.trace(iso(d, a)) / d - a; };

  EstimatorReport rep;
  rep.estimator = EstimatorKind::a3_scalar;
  rep.R = pb.grid().R;

  const int n = std::max(2, opts.scan_points);
  std::vector<double> xs(n), fs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = i == n - 1 ? b.beta : b.alpha + (b.beta - b.alpha) * i / (n - 1);
    fs[i] = f(xs[i]);
  }
  int first = -1, changes = 0;
  for (int i = 0; i < n; ++i) {
    if (fs[i] == 0.0) {
      if (first < 0) first = i;
      ++changes;
      continue;
    }
    if (i + 1 < n && fs[i] * fs[i + 1] < 0.0) {
      if (first < 0) first = i;
      ++changes;
    }
  }
  if (first < 0) {
    throw Error("no sign change of (1/d) Tr G(aI) - a on [alpha, beta]: f(alpha) = " + std::to_string(fs.front()) +
                ", f(beta) = " + std::to_string(fs.back()));
  }
  rep.multiple_roots = changes > 1;
  if (rep.multiple_roots) rep.note = std::to_string(changes) + " sign changes on the scan";

  double lo = xs[first], flo = fs[first];
  if (flo == 0.0) {
    rep.matrix = iso(d, lo);
  } else {
    double hi = xs[first + 1], fhi = fs[first + 1];
    const double width = opts.relative_width * (b.beta - b.alpha);
    int it = 0;
    while (hi - lo > width) {
      ++it;
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
    }
    double a = lo;
    if (hi > lo) a = lo - flo * (hi - lo) / (fhi - flo);
    rep.matrix = iso(d, a);
    rep.outer_iterations = it;
  }
  rep.inner_residual = pb.worst_residual();
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

EstimatorReport estimate_a3_isotropic(const CoefficientField& field, const Grid& grid, const A3ScalarOptions& opts,
                                      const SolverOptions& solver) {
  EmbeddedProblem pb(field, grid, solver);
  return estimate_a3_isotropic(pb, opts);
}

double fixed_point_residual(EmbeddedProblem& problem, const SymMatrix& A) {
  const SymMatrix G = problem.g(A);
  double r = 0.0;
  for (int i = 0; i < problem.dim(); ++i) r = std::max(r, std::abs(A(i, i) - G(i, i)));
  for (int i = 0; i < problem.dim(); ++i)
    for (int j = i + 1; j < problem.dim(); ++j) r = std::max(r, std::abs(A(i, j)));
  return r;
}

EstimatorReport estimate_a3_matrix(EmbeddedProblem& pb, const A3MatrixOptions& opts) {
  const auto t0 = Clock::now();
  const auto& b = pb.bounds();
  const int d = pb.dim();
  EstimatorReport rep;
  rep.estimator = EstimatorKind::a3_matrix;
  rep.R = pb.grid().R;
  rep.converged = false;

  SymMatrix A(d);
  if (opts.start) {
    for (int i = 0; i < d; ++i) A.set(i, i, clamp_to(b, (*opts.start)(i, i)));
  } else {
    for (int i = 0; i < d; ++i) A.set(i, i, clamp_to(b, pb.sample().inside_mean(i, i)));
  }
  int it = 0;
  try {
    while (it < opts.max_iterations) {
      ++it;
      const SymMatrix G = pb.g(A);
      SymMatrix next(d);
      double step = 0.0;
      for (int i = 0; i < d; ++i) {
        next.set(i, i, clamp_to(b, (1.0 - opts.theta) * A(i, i) + opts.theta * G(i, i)));
        step = std::max(step, std::abs(next(i, i) - A(i, i)));
      }
      A = next;
      if (step <= opts.step_tol) {
        rep.converged = true;
        break;
      }
    }
    if (!rep.converged) rep.note = "no convergence in " + std::to_string(opts.max_iterations) + " iterations";
  } catch (const SolverError& e) {
    rep.note = e.what();
  }
  rep.matrix = A;
  rep.outer_iterations = it;
  rep.inner_residual = pb.worst_residual();
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

EstimatorReport estimate_a3_matrix(const CoefficientField& field, const Grid& grid, const A3MatrixOptions& opts,
                                   const SolverOptions& solver) {
  EmbeddedProblem pb(field, grid, solver);
  return estimate_a3_matrix(pb, opts);
}

// ---- convergence study ------------------------------------------------------

namespace {

std::vector<EstimatorReport> run_embedded(const CoefficientField& field, const Grid& grid, const StudyOptions& o) {
  std::vector<EstimatorReport> out;
  EmbeddedProblem pb(field, grid, o.solver);
  A1Options a1o;
  a1o.space = o.space;
  std::optional<EstimatorReport> a1;
  for (auto kind : o.estimators) {
    if (kind == EstimatorKind::supercell) continue;
    EstimatorReport rep;
    try {
      switch (kind) {
        case EstimatorKind::a1:
          if (!a1) a1 = estimate_a1(pb, a1o);
          rep = *a1;
          break;
        case EstimatorKind::a2:
          if (!a1) a1 = estimate_a1(pb, a1o);
          rep = estimate_a2(pb, a1o, &*a1);
          break;
        case EstimatorKind::a3_scalar: rep = estimate_a3_isotropic(pb); break;
        case EstimatorKind::a3_matrix: rep = estimate_a3_matrix(pb); break;
        case EstimatorKind::supercell: break;
      }
    } catch (const std::exception& e) {
      rep = EstimatorReport{};
      rep.failed = true;
      rep.converged = false;
      rep.note = e.what();
      rep.matrix = SymMatrix(grid.dim) * 0.0;
    }
    rep.estimator = kind;
    rep.R = grid.R;
    out.push_back(rep);
  }
  return out;
}

EstimatorReport run_supercell(const CoefficientField& field, double N, const StudyOptions& o) {
  EstimatorReport rep;
  rep.estimator = EstimatorKind::supercell;
  rep.R = N;
  const auto t0 = Clock::now();
  try {
    const int cpu = o.supercell_cells_per_unit > 0 ? o.supercell_cells_per_unit : o.cells_per_unit;
    const auto grid = PeriodicGrid::make(field.dim(), N, cpu);
    const bool inclusions = std::holds_alternative<InclusionField>(field.kind());
    const auto res = supercell_result(assemble_periodic(inclusions ? field.restricted_to_box(N) : field, grid), o.solver);
    rep.matrix = res.matrix;
    rep.outer_iterations = 1;
    rep.inner_residual = res.residual;
  } catch (const std::exception& e) {
    rep.failed = true;
    rep.converged = false;
    rep.note = e.what();
    rep.matrix = SymMatrix(field.dim()) * 0.0;
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

}  // namespace

std::vector<EstimatorReport> convergence_study(const CoefficientField& field, const StudyOptions& o) {
  for (std::size_t i = 1; i < o.R_list.size(); ++i) {
    if (!(o.R_list[i] > o.R_list[i - 1])) throw ConfigError("R_list", "must be strictly increasing");
  }
  for (std::size_t i = 1; i < o.supercell_N.size(); ++i) {
    if (!(o.supercell_N[i] > o.supercell_N[i - 1])) throw ConfigError("supercell_N_list", "must be strictly increasing");
  }
  const bool want_supercell =
      std::find(o.estimators.begin(), o.estimators.end(), EstimatorKind::supercell) != o.estimators.end() ||
      !o.supercell_N.empty();

  // Tasks: (R index, kappa multiplier) for embedded rows, then one per N.
  struct Task {
    int r = -1;
    int mult = 1;
    int n = -1;
  };
  std::vector<Task> tasks;
  for (int i = 0; i < static_cast<int>(o.R_list.size()); ++i) {
    tasks.push_back({i, 1, -1});
    if (o.richardson) tasks.push_back({i, 2, -1});
  }
  if (want_supercell) {
    for (int i = 0; i < static_cast<int>(o.supercell_N.size()); ++i) tasks.push_back({-1, 1, i});
  }
  std::vector<std::vector<EstimatorReport>> results(tasks.size());

  const auto run = [&](std::size_t t) {
    const Task& task = tasks[t];
    if (task.n >= 0) {
      results[t] = {run_supercell(field, o.supercell_N[task.n], o)};
      return;
    }
    const double R = o.R_list[task.r];
    try {
      const auto grid = Grid::make(field.dim(), o.kappa * task.mult * R, o.cells_per_unit, R, o.boundary);
      results[t] = run_embedded(field, grid, o);
    } catch (const std::exception& e) {
      for (auto kind : o.estimators) {
        if (kind == EstimatorKind::supercell) continue;
        EstimatorReport rep;
        rep.R = R;
        rep.estimator = kind;
        rep.failed = true;
        rep.converged = false;
        rep.note = e.what();
        rep.matrix = SymMatrix(field.dim()) * 0.0;
        results[t].push_back(rep);
      }
    }
  };

  const int jobs = std::max(1, o.jobs);
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1) if (jobs > 1)
  for (std::size_t t = 0; t < tasks.size(); ++t) run(t);

  std::vector<EstimatorReport> out;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    if (task.mult == 2) continue;
    if (o.richardson && task.n < 0) {
      // Linear extrapolation in 1/kappa from kappa and 2 kappa.
      const auto& coarse = results[t];
      const auto& fine = results[t + 1];
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        EstimatorReport rep = fine[k];
        if (coarse[k].failed || fine[k].failed) {
          rep.failed = true;
          rep.converged = false;
          if (rep.note.empty()) rep.note = coarse[k].note;
        } else {
          rep.matrix = fine[k].matrix * 2.0 - coarse[k].matrix;
          rep.outer_iterations = coarse[k].outer_iterations + fine[k].outer_iterations;
          rep.inner_residual = std::max(coarse[k].inner_residual, fine[k].inner_residual);
          rep.wall_seconds = coarse[k].wall_seconds + fine[k].wall_seconds;
          rep.converged = coarse[k].converged && fine[k].converged;
          rep.multiple_roots = coarse[k].multiple_roots || fine[k].multiple_roots;
        }
        out.push_back(rep);
      }
      continue;
    }
    out.insert(out.end(), results[t].begin(), results[t].end());
  }
  return out;
}

}  // namespace embedhom
