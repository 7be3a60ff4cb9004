#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "embedhom/corrector.hpp"
#include "embedhom/error.hpp"
#include "embedhom/kernels.hpp"
#include "embedhom/oned_oracle.hpp"
#include "generators.hpp"

using namespace embedhom;

namespace {

std::vector<std::vector<double>> dense(const StencilOperator& op) {
  const std::size_t n = op.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  std::vector<double> e(n), y(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    kernels::serial::apply(op, e, y);
    for (std::size_t i = 0; i < n; ++i) k[i][j] = y[i];
  }
  return k;
}

std::vector<double> random_vector(CounterRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double energy_p(const DiscreteSystem& sys, std::vector<double> p, const SolverOptions& o = {}) {
  return energy_at_minimizer(sys, solve_corrector(sys, p, o));
}

const EllipticityBounds kB(1.0, 4.0);

}  // namespace

TEST_CASE("grid invariants") {
  CHECK_NOTHROW(Grid::make(2, 8.0, 8, 2.0));
  CHECK_THROWS_AS(Grid::make(2, 3.0, 8, 2.0), Error);   // L < 2R
  CHECK_THROWS_AS(Grid::make(2, 8.0, 1, 2.0), Error);   // R < 4h
  CHECK_THROWS_AS(Grid::make(2, 8.3, 1, 2.0), Error);   // 2 L cpu not integral
  CHECK(Grid::make(2, 8.0, 8, 2.0).n() == 128);
}

TEST_CASE("serial and OpenMP kernels agree") {
  CounterRng rng(10);
  const auto field = gen::inclusions(rng, 2, kB, 4.0);
  const auto sys = assemble(field, SymMatrix::scalar(2, 2.0), Grid::make(2, 8.0, 16, 4.0));
  const auto v = random_vector(rng, sys.size());
  std::vector<double> ys(sys.size()), yo(sys.size());
  kernels::serial::apply(sys.op, v, ys);
  kernels::omp::apply(sys.op, v, yo);
  CHECK(ys == yo);

  const auto w = random_vector(rng, sys.size());
  const double ds = kernels::serial::dot(v, w);
  std::vector<double> dots;
  for (int threads : {1, 2, 3, 4}) {
    omp_set_num_threads(threads);
    dots.push_back(kernels::omp::dot(v, w));
  }
  omp_set_num_threads(omp_get_num_procs());
  for (double d : dots) CHECK(d == dots[0]);  // bitwise, whatever the thread count
  CHECK(dots[0] == doctest::Approx(ds).epsilon(1e-12));

  auto a = w, b = w;
  kernels::serial::axpy(0.3, v, a);
  kernels::omp::axpy(0.3, v, b);
  CHECK(a == b);
  kernels::serial::xpby(v, -1.7, a);
  kernels::omp::xpby(v, -1.7, b);
  CHECK(a == b);
}

TEST_CASE("assemble: constant field is the scaled Laplacian") {
  const auto grid = Grid::make(2, 4.0, 4, 1.0);
  const auto sys = assemble(CoefficientField::constant(SymMatrix::scalar(2, 3.0), kB), SymMatrix::scalar(2, 3.0), grid);
  const auto lap = assemble(CoefficientField::constant(SymMatrix::scalar(2, 1.0), kB), SymMatrix::scalar(2, 1.0), grid);
  for (std::size_t f = 0; f < sys.op.tx.size(); ++f) CHECK(sys.op.tx[f] == doctest::Approx(3.0 * lap.op.tx[f]));
  for (std::size_t f = 0; f < sys.op.ty.size(); ++f) CHECK(sys.op.ty[f] == doctest::Approx(3.0 * lap.op.ty[f]));
  // Interior x-faces of the unit Laplacian carry h^{d-2} = 1.
  CHECK(lap.op.tx[5] == 1.0);
}

TEST_CASE("assemble: 1D operator equals a hand-assembled tridiagonal matrix") {
  // Smallest 1D grid allowed by R >= 4h and L >= 2R: 16 cells of width 1/4.
  const auto grid = Grid::make(1, 2.0, 4, 1.0);
  PiecewiseField1D pw{{-0.5, 0.0, 0.5}, {1.0, 3.0, 2.0, 4.0}, std::nullopt, 0.0};
  const CoefficientField field(1, pw, kB);
  const double a = 1.5, h = 0.25;
  const auto sys = assemble(field, SymMatrix::scalar(1, a), grid);

  std::vector<double> k(16);
  for (int i = 0; i < 16; ++i) {
    const double x = -2.0 + (i + 0.5) * h;
    k[i] = std::abs(x) < 1.0 ? (x < -0.5 ? 1.0 : x < 0.0 ? 3.0 : x < 0.5 ? 2.0 : 4.0) : a;
  }
  std::vector<std::vector<double>> expect(16, std::vector<double>(16, 0.0));
  for (int i = 1; i < 16; ++i) {
    const double t = 2.0 * k[i - 1] * k[i] / (k[i - 1] + k[i]) / h;
    expect[i][i] += t;
    expect[i - 1][i - 1] += t;
    expect[i][i - 1] -= t;
    expect[i - 1][i] -= t;
  }
  const auto got = dense(sys.op);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) CHECK(got[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-14));

  // Dirichlet adds 2 k / h on the two boundary cells.
  const auto dir = dense(assemble(field, SymMatrix::scalar(1, a), Grid::make(1, 2.0, 4, 1.0, Boundary::dirichlet)).op);
  CHECK(dir[0][0] == doctest::Approx(expect[0][0] + 2.0 * a / h));
  CHECK(dir[15][15] == doctest::Approx(expect[15][15] + 2.0 * a / h));
}

TEST_CASE("property: assembled operators are symmetric and positive semidefinite") {
  CounterRng rng(11);
  for (int t = 0; t < 8; ++t) {
    const int dim = 1 + t % 2;
    const auto field = t % 4 < 2 ? gen::checkerboard(rng, dim, kB) : gen::inclusions(rng, dim, kB, 3.0);
    const auto grid = Grid::make(dim, 4.0, 4, 1.0, t % 3 == 0 ? Boundary::dirichlet : Boundary::neumann);
    const auto sys = assemble(field, gen::diagonal(rng, dim, kB), grid);
    const auto k = dense(sys.op);
    for (std::size_t i = 0; i < k.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) REQUIRE(k[i][j] == k[j][i]);
    for (int s = 0; s < 10; ++s) {
      const auto v = random_vector(rng, sys.size());
      std::vector<double> kv(sys.size());
      kernels::serial::apply(sys.op, v, kv);
      REQUIRE(kernels::serial::dot(v, kv) >= -1e-12);
    }
  }
}

TEST_CASE("assemble rejects bad inputs") {
  const auto grid = Grid::make(2, 4.0, 4, 1.0);
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, kB);
  const double rows[4] = {2.0, 0.5, 0.5, 2.0};
  CHECK_THROWS_AS(assemble(field, SymMatrix::from_rows(2, rows), grid), Error);
  CHECK_THROWS_AS(assemble(field, SymMatrix::scalar(2, 5.0), grid), Error);
  CHECK_THROWS_AS(assemble(field, SymMatrix::scalar(1, 2.0), grid), Error);
  const auto aniso = CoefficientField::constant(SymMatrix::from_rows(2, rows), kB);
  CHECK_THROWS_AS(assemble(aniso, SymMatrix::scalar(2, 2.0), grid), Error);
}

TEST_CASE("solve_corrector: constant field gives w = 0") {
  const auto sys = assemble(CoefficientField::constant(SymMatrix::scalar(2, 2.0), kB), SymMatrix::scalar(2, 2.0),
                            Grid::make(2, 4.0, 8, 1.0));
  const double p[2] = {1.0, 0.7};
  const auto sol = solve_corrector(sys, p);
  for (double v : sol.values) CHECK(v == 0.0);
  CHECK(sol.iterations == 0);
  const double zero[2] = {0.0, 0.0};
  CHECK_THROWS_AS(solve_corrector(sys, zero), Error);
}

TEST_CASE("solve_corrector: linearity in p and zero mean over the unit ball") {
  const auto sys = assemble(CoefficientField::checkerboard(2, 1.0, 4.0, kB), SymMatrix::scalar(2, 2.0),
                            Grid::make(2, 8.0, 8, 2.0));
  const double e1[2] = {1.0, 0.0}, e2[2] = {0.0, 1.0}, s[2] = {1.0, 1.0};
  const auto w1 = solve_corrector(sys, e1), w2 = solve_corrector(sys, e2), ws = solve_corrector(sys, s);
  double scale = 0.0, err = 0.0, mean = 0.0;
  int count = 0;
  for (std::size_t c = 0; c < sys.size(); ++c) {
    scale = std::max(scale, std::abs(ws.values[c]));
    err = std::max(err, std::abs(ws.values[c] - w1.values[c] - w2.values[c]));
    if (sys.unit_ball[c]) {
      mean += ws.values[c];
      ++count;
    }
  }
  CHECK(err <= 1e-8 * scale);
  CHECK(std::abs(mean / count) < 1e-12 * scale);
  CHECK(ws.residual <= 1e-10);
}

TEST_CASE("solve_corrector: 1D flux is constant and equals a_ext p") {
  const double R = 2.0, h = 1.0 / 16;
  const oned::Profile1D prof{{-R, 0.0, R}, {1.0, 4.0}, kB};
  for (double a : {1.0, 1.6, 3.0}) {
    const auto sys = assemble(prof.as_field(), SymMatrix::scalar(1, a), Grid::make(1, 8.0, 16, R));
    const double p[1] = {1.0};
    const auto sol = solve_corrector(sys, p);
    for (int i = 1; i < sys.grid.n(); ++i) {
      const double tau = sys.op.tx[i];
      REQUIRE(tau * (h * p[0] + sol.values[i] - sol.values[i - 1]) == doctest::Approx(a).epsilon(1e-8));
    }
  }
}

TEST_CASE("solver: Jacobi and spectral preconditioners agree; the cap raises SolverError") {
  const auto sys = assemble(CoefficientField::checkerboard(2, 1.0, 4.0, kB), SymMatrix::scalar(2, 2.5),
                            Grid::make(2, 4.0, 8, 2.0));
  const double p[2] = {1.0, 0.0};
  SolverOptions jac;
  jac.preconditioner = PreconditionerKind::jacobi;
  const auto a = solve_corrector(sys, p), b = solve_corrector(sys, p, jac);
  CHECK(a.iterations < b.iterations);
  CHECK(energy_at_minimizer(sys, a) == doctest::Approx(energy_at_minimizer(sys, b)).epsilon(1e-12));

  SolverOptions tight;
  tight.max_iterations = 2;
  try {
    solve_corrector(sys, p, tight);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.residual() > 1e-10);
    CHECK(e.iterations() == 2);
  }
}

TEST_CASE("energy_functional examples and invariants") {
  CounterRng rng(12);
  const auto field = gen::inclusions(rng, 2, kB, 3.0);
  const auto sys = assemble(field, SymMatrix::scalar(2, 2.0), Grid::make(2, 8.0, 8, 2.0));
  const double p[2] = {0.6, -1.1};
  const std::vector<double> zero(sys.size(), 0.0);

  // v = 0: int_B p.A p in the two-point quadrature, i.e. |B| p.A p plus the
  // face excess (tau_f - tau^A_f) g_f^2 over the faces touching B.
  const double h = sys.grid.h();
  const int n = sys.grid.n();
  double excess = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 1; i < n; ++i) excess += (sys.op.tx[j * (n + 1) + i] - 2.0) * p[0] * p[0] * h * h;
  }
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < n; ++i) excess += (sys.op.ty[j * n + i] - 2.0) * p[1] * p[1] * h * h;
  }
  const double expect = 0.5 * 2.0 * (p[0] * p[0] + p[1] * p[1]) + excess / (2.0 * sys.ball_measure);
  CHECK(energy_functional(sys, p, zero) == doctest::Approx(expect).epsilon(1e-12));
  // ... which is within O(h) of the cell-midpoint integral.
  double inner = 0.0;
  for (std::size_t c = 0; c < sys.size(); ++c) {
    if (sys.inside[c]) inner += sys.k[0][c] * p[0] * p[0] + sys.k[1][c] * p[1] * p[1];
  }
  CHECK(energy_functional(sys, p, zero) == doctest::Approx(inner * h * h / (2.0 * sys.ball_measure)).epsilon(0.05));

  const auto sol = solve_corrector(sys, p);
  const double jmin = energy_at_minimizer(sys, sol);
  CHECK(std::abs(energy_functional(sys, p, sol.values) - jmin) <= 10 * 1e-10 * std::max(1.0, std::abs(jmin)));
  CHECK(jmin <= energy_functional(sys, p, zero));

  // Constant shifts (Neumann truncation).
  const auto v = random_vector(rng, sys.size());
  auto shifted = v;
  for (double& x : shifted) x += 3.7;
  const double jv = energy_functional(sys, p, v);
  CHECK(std::abs(energy_functional(sys, p, shifted) - jv) <= 1e-12 * std::abs(jv));

  // The minimizer beats random perturbations of itself.
  for (int t = 0; t < 5; ++t) {
    auto w = sol.values;
    const auto d = random_vector(rng, sys.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] += 1e-3 * d[c];
    CHECK(energy_functional(sys, p, w) >= jmin);
  }
}

TEST_CASE("energy_at_minimizer: constant field and 1D closed form") {
  const double R = 2.0;
  const auto c = assemble(CoefficientField::constant(SymMatrix::scalar(2, 2.5), kB), SymMatrix::scalar(2, 2.5),
                          Grid::make(2, 8.0, 8, R));
  CHECK(energy_p(c, {1.0, 2.0}) == doctest::Approx(0.5 * 2.5 * 5.0).epsilon(1e-15));

  const oned::Profile1D prof{{-R, 0.0, R}, {1.0, 4.0}, kB};
  for (double a : {1.0, 1.6, 2.2, 4.0}) {
    const auto sys = assemble(prof.as_field(), SymMatrix::scalar(1, a), Grid::make(1, 8.0, 16, R));
    CHECK(std::abs(energy_p(sys, {1.0}) - (a - a * a * 0.625 / 2.0)) <= 1e-6);
  }
}

TEST_CASE("property: quadratic dependence on p and the v = 0 upper bound") {
  CounterRng rng(13);
  for (int t = 0; t < 6; ++t) {
    const auto field = t % 2 ? gen::checkerboard(rng, 2, kB) : gen::inclusions(rng, 2, kB, 3.0);
    const auto sys = assemble(field, gen::diagonal(rng, 2, kB), Grid::make(2, 6.0, 8, 2.0));
    const std::vector<double> p = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double j = energy_p(sys, p);
    for (double lam : {-1.0, 2.0, 0.5}) {
      CHECK(energy_p(sys, {lam * p[0], lam * p[1]}) == doctest::Approx(lam * lam * j).epsilon(1e-9));
    }
    const auto G = evaluate_g(sys).G;
    double inner = 0.0;
    for (std::size_t c = 0; c < sys.size(); ++c) {
      if (sys.inside[c]) inner += sys.k[0][c] * p[0] * p[0] + sys.k[1][c] * p[1] * p[1];
    }
    inner *= sys.grid.h() * sys.grid.h() / sys.ball_measure;
    CHECK(G.quad(p) <= inner + 1e-10);
    CHECK(G.quad(p) == doctest::Approx(2.0 * j).epsilon(1e-9));
  }
}

TEST_CASE("g_matrix: constant field, trace identity, polarization") {
  const auto grid = Grid::make(2, 8.0, 8, 2.0);
  CounterRng rng(14);
  for (int t = 0; t < 3; ++t) {
    const SymMatrix A = gen::diagonal(rng, 2, kB);
    CHECK(g_matrix(CoefficientField::constant(A, kB), A, grid).max_abs_diff(A) <= 1e-10);
  }

  const auto sys = assemble(gen::inclusions(rng, 2, kB, 3.0), SymMatrix::scalar(2, 2.0), grid);
  const auto ev = evaluate_g(sys);
  CHECK(ev.G.trace() / 2.0 == doctest::Approx(energy_p(sys, {1.0, 0.0}) + energy_p(sys, {0.0, 1.0})).epsilon(1e-10));
  // Polarization against an explicit solve for p = e1 + e2.
  const double j11 = energy_p(sys, {1.0, 1.0});
  CHECK(ev.G(0, 1) == doctest::Approx(j11 - ev.G(0, 0) / 2.0 - ev.G(1, 1) / 2.0).epsilon(1e-8));
}

TEST_CASE("g_matrix: checkerboard square symmetry at R = 4") {
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, kB);
  const SymMatrix G = g_matrix(field, SymMatrix::scalar(2, 2.0), Grid::make(2, 16.0, 16, 4.0));
  CHECK(std::abs(G(0, 0) - G(1, 1)) <= 1e-3);
  CHECK(std::abs(G(0, 1)) <= 1e-3);
}

TEST_CASE("trace_g_gradient: constant field, 1D closed form, finite differences") {
  const auto grid = Grid::make(2, 8.0, 8, 2.0);
  const SymMatrix A = SymMatrix::scalar(2, 2.0);
  const SymMatrix g0 = trace_g_gradient(CoefficientField::constant(A, kB), A, grid);
  CHECK(g0.max_abs_diff(SymMatrix(2)) <= 1e-9);

  const double R = 2.0;
  const oned::Profile1D prof{{-R, 0.0, R}, {1.0, 4.0}, kB};
  for (double a : {1.0, 1.3, 2.5}) {
    const SymMatrix g = trace_g_gradient(prof.as_field(), SymMatrix::scalar(1, a), Grid::make(1, 8.0, 16, R));
    CHECK(g(0, 0) == doctest::Approx(2.0 - 2.0 * a * 0.625).epsilon(1e-8));
  }

  CounterRng rng(15);
  for (auto boundary : {Boundary::neumann, Boundary::dirichlet}) {
    const auto field = gen::inclusions(rng, 2, kB, 3.0);
    const auto g2 = Grid::make(2, 6.0, 8, 2.0, boundary);
    const double x[2] = {rng.uniform(1.5, 3.5), rng.uniform(1.5, 3.5)};
    const SymMatrix g = trace_g_gradient(field, SymMatrix::diagonal(x), g2);
    const double step = 1e-4 * kB.beta;
    for (int i = 0; i < 2; ++i) {
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[i] += step;
      xm[i] -= step;
      const double fd = (g_matrix(field, SymMatrix::diagonal(xp), g2).trace() -
                         g_matrix(field, SymMatrix::diagonal(xm), g2).trace()) /
                        (2.0 * step);
      CHECK(g(i, i) == doctest::Approx(fd).epsilon(1e-4));
    }
    CHECK(g(0, 1) == 0.0);
  }
}

TEST_CASE("property: Tr G is midpoint concave") {
  CounterRng rng(16);
  const auto grid = Grid::make(2, 6.0, 8, 2.0);
  for (int t = 0; t < 10; ++t) {
    const auto sample = sample_field(t % 2 ? gen::checkerboard(rng, 2, kB) : gen::inclusions(rng, 2, kB, 3.0), grid);
    const SymMatrix A = gen::diagonal(rng, 2, kB), B = gen::diagonal(rng, 2, kB);
    const double ta = evaluate_g(assemble(sample, A)).G.trace();
    const double tb = evaluate_g(assemble(sample, B)).G.trace();
    const double tm = evaluate_g(assemble(sample, (A + B) * 0.5)).G.trace();
    CHECK(tm >= 0.5 * (ta + tb) - 1e-8 * std::abs(ta));
  }
}

TEST_CASE("truncation: doubling L shrinks the change in Tr G") {
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, kB);
  for (auto boundary : {Boundary::neumann, Boundary::dirichlet}) {
    std::vector<double> tr;
    for (double L : {4.0, 8.0, 16.0}) {
      tr.push_back(g_matrix(field, SymMatrix::scalar(2, 1.5), Grid::make(2, L, 8, 2.0, boundary)).trace());
    }
    CHECK(std::abs(tr[2] - tr[1]) * 2.0 <= std::abs(tr[1] - tr[0]));
  }
}
