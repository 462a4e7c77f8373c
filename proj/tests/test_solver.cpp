#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "sdd/errors.hpp"
#include "sdd/solver.hpp"
#include "support.hpp"

using namespace sdd;
using namespace sdd::test;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

/// Method of steps for u' = -u(t - 1), phi = 1: on [k, k+1] the solution is a
/// polynomial P_k with P_0 = 1 on [-1, 0] and P_{k+1}(t) = P_k(k) - int_k^t P_k(s - 1) ds.
/// Polynomials are kept as coefficient vectors in t.
struct MethodOfSteps {
  std::vector<std::vector<double>> pieces;

  static double eval(const std::vector<double>& c, double t) {
    double s = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) s = s * t + c[i];
    return s;
  }

  explicit MethodOfSteps(int intervals) {
    pieces.push_back({1.0});
    for (int k = 0; k < intervals; ++k) {
      const auto& prev = pieces.back();
      // q(s) = prev(s - 1) expanded in s.
      std::vector<double> q(prev.size(), 0.0);
      for (std::size_t i = 0; i < prev.size(); ++i) {
        double binom = 1.0;
        for (std::size_t j = 0; j <= i; ++j) {
          q[j] += prev[i] * binom * std::pow(-1.0, static_cast<double>(i - j));
          binom = binom * static_cast<double>(i - j) / static_cast<double>(j + 1);
        }
      }
      std::vector<double> next(q.size() + 1, 0.0);
      for (std::size_t i = 0; i < q.size(); ++i) next[i + 1] = -q[i] / static_cast<double>(i + 1);
      next[0] = eval(prev, k) - eval(next, k);
      pieces.push_back(next);
    }
  }

  double operator()(double t) const {
    if (t <= 0.0) return 1.0;
    const auto k = std::min(static_cast<std::size_t>(std::ceil(t)), pieces.size() - 1);
    return eval(pieces[k], t);
  }
};

SolverConfig config(double dt, double T) {
  SolverConfig c;
  c.dt = dt;
  c.T = T;
  return c;
}

const HistorySegment& ones() {
  static const auto h = scalar_segment({-1.0, 0.0}, {1.0, 1.0}, 1.0);
  return h;
}

}  // namespace

TEST_CASE("method-of-steps oracle reproduces the closed form") {
  const MethodOfSteps exact(3);
  CHECK_THAT(exact(0.5), WithinAbs(0.5, 1e-15));
  CHECK_THAT(exact(2.0), WithinAbs(-0.5, 1e-14));
}

TEST_CASE("pure decay") {
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec{EvolutionOperator::ode_diag({1.0}, 0.0),
                                                                 Nonlinearity::local(PointwiseMap::affine(0.0, 0.0), SpaceMeta::ode(1)),
                                                                 DelayFunctional::constant(0.5, 1.0)});
  const auto tr = solve(p, ones(), config(1e-3, 1.0));
  CHECK_THAT(tr.value_at(1.0)[0], WithinAbs(std::exp(-1.0), 1e-6));
  CHECK(mild_residual(tr, {0.1, 0.5, 1.0}) <= 1e-8);
}

TEST_CASE("constant delay: first steps read the initial segment exactly") {
  const auto tr = solve(constant_delay_problem(), ones(), config(1e-3, 0.01));
  for (std::size_t i = 0; i < tr.times().size(); ++i) {
    CHECK_THAT(tr.values()[i][0], WithinAbs(1.0 - tr.times()[i], 1e-14));
  }
}

TEST_CASE("constant delay matches the exponential Euler recurrence") {
  // Independent recurrence with A = 0: u_{m+1} = u_m - dt * u(s_m - 1).
  const double dt = 1e-2;
  const auto tr = solve(constant_delay_problem(), ones(), config(dt, 2.0));
  const std::size_t lag = 100;
  std::vector<double> u{1.0};
  for (std::size_t m = 0; m < 200; ++m) {
    const double delayed = m < lag ? 1.0 : u[m - lag];
    u.push_back(u[m] - dt * delayed);
  }
  for (std::size_t m = 0; m <= 200; ++m) CHECK_THAT(tr.values()[m][0], WithinAbs(u[m], 1e-12));
}

TEST_CASE("constant delay agrees with the method of steps within 10 dt on [0, 3]") {
  const MethodOfSteps exact(3);
  for (double dt : {1e-2, 1e-3}) {
    const auto tr = solve(constant_delay_problem(), ones(), config(dt, 3.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times().size(); ++i) {
      worst = std::max(worst, std::abs(tr.values()[i][0] - exact(tr.times()[i])));
    }
    CHECK(worst <= 10.0 * dt);
  }
}

TEST_CASE("first-order convergence") {
  const MethodOfSteps exact(2);
  std::vector<double> err;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const auto tr = solve(constant_delay_problem(), ones(), config(dt, 2.0));
    err.push_back(std::abs(tr.value_at(2.0)[0] - exact(2.0)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    CHECK(order >= 0.8);
    CHECK(order <= 1.2);
  }
}

TEST_CASE("final partial step lands on T") {
  const auto tr = solve(constant_delay_problem(), ones(), config(0.3, 1.0));
  CHECK(tr.end_time() == 1.0);
  CHECK(tr.times().size() == 5);
  CHECK_THAT(tr.steps().back().dt, WithinAbs(0.1, 1e-12));
}

TEST_CASE("Nicholson equilibrium is preserved") {
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec{
      EvolutionOperator::ode_diag({1.0}, 0.0), Nonlinearity::nicholson(std::numbers::e, std::nullopt, SpaceMeta::ode(1)),
      DelayFunctional::nested_point(ScalarMap::affine(0.3, 0.2, 0.0, 1.0), ScalarMap::affine(0.5, 0.1, 0.0, 1.0), 1.0,
                                    1.0)});
  const auto tr = solve(p, ones(), config(1e-2, 10.0));
  double worst = 0.0;
  for (const auto& v : tr.values()) worst = std::max(worst, std::abs(v[0] - 1.0));
  CHECK(worst <= 1e-8);
  CHECK(tr.diagnostics().delay_clamps == 0);
}

TEST_CASE("config validation") {
  SolverConfig c = config(2.0, 3.0);
  CHECK_THROWS_WITH(solve(constant_delay_problem(), ones(), c), ContainsSubstring("dt exceeds delay horizon"));
  c = config(0.1, 1.0);
  c.picard_tol = 0.0;
  CHECK_THROWS_AS(solve(constant_delay_problem(), ones(), c), ConstructionError);
  const auto wrong = scalar_segment({-2.0, 0.0}, {1.0, 1.0}, 2.0);
  CHECK_THROWS_AS(solve(constant_delay_problem(), wrong, config(0.1, 1.0)), ConstructionError);
}

TEST_CASE("vanishing delay is resolved by Picard iteration") {
  const auto p = constant_delay_problem(0.0);
  const double dt = 1e-3;
  const auto tr = solve(p, ones(), config(dt, 1.0));
  for (const auto& s : tr.steps()) {
    CHECK(s.picard_iterations >= 1);
    CHECK(s.picard_iterations <= 3);
  }
  // Implicit exponential Euler for u' = -u: u_{m+1} = u_m / (1 + dt).
  CHECK_THAT(tr.value_at(1.0)[0], WithinAbs(std::pow(1.0 + dt, -1000.0), 1e-9));
}

TEST_CASE("Picard divergence reports a contraction estimate") {
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec{
      EvolutionOperator::ode_diag({0.0}, 0.0), Nonlinearity::local(PointwiseMap::affine(-50.0, 0.0), SpaceMeta::ode(1)),
      DelayFunctional::constant(0.0, 1.0)});
  try {
    solve(p, ones(), config(0.1, 1.0));
    FAIL("expected PicardDivergence");
  } catch (const PicardDivergence& e) {
    CHECK(e.contraction_estimate() > 1.0);
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("mild residual") {
  const auto p = constant_delay_problem();
  const auto coarse = solve(p, ones(), config(1e-2, 2.0));
  const auto fine = solve(p, ones(), config(5e-3, 2.0));
  CHECK(mild_residual(coarse, {0.0}) == 0.0);
  std::vector<double> samples;
  for (int i = 1; i <= 10; ++i) samples.push_back(0.2 * i);
  const double a = mild_residual(coarse, samples);
  const double b = mild_residual(fine, samples);
  CHECK(a <= 10.0 * 1e-2);
  CHECK(b <= 10.0 * 5e-3);
  CHECK(a / b >= 1.7);
  CHECK(a / b <= 2.3);
  CHECK_THROWS_AS(mild_residual(coarse, {2.5}), DomainError);
}

TEST_CASE("evolution map") {
  const auto p = constant_delay_problem();
  const auto phi = scalar_sampled([](double th) { return 1.0 + 0.3 * std::sin(4.0 * th); }, 1.0, 50);
  const auto cfg = config(1e-3, 1.0);
  const auto id = evolution_map(*p, cfg, phi, 0.0);
  for (std::size_t i = 0; i < phi.knot_count(); ++i) CHECK(id.values()[i] == phi.values()[i]);

  const auto direct = evolution_map(*p, cfg, phi, 1.5);
  const auto composed = evolution_map(*p, cfg, evolution_map(*p, cfg, phi, 0.7), 0.8);
  CHECK(sup_distance(direct, composed) <= 5.0 * cfg.dt);

  const auto base = evolution_map(*p, cfg, phi, 1.0);
  double last = std::numeric_limits<double>::infinity();
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const double d = sup_distance(evolution_map(*p, cfg, phi, 1.0 + delta), base);
    CHECK(d < last);
    last = d;
  }
  CHECK_THROWS_AS(evolution_map(*p, cfg, phi, -1.0), DomainError);
}

TEST_CASE("Nicholson PDE run stays finite without clamping") {
  const auto space = SpaceMeta::pde_grid(64, std::numbers::pi);
  const auto p = std::make_shared<const ProblemSpec>(ProblemSpec{
      EvolutionOperator::pde_dirichlet(64, std::numbers::pi, 1.0, 0.0),
      Nonlinearity::nicholson(std::numbers::e, Kernel::gaussian(0.1), space),
      DelayFunctional::nested_point(ScalarMap::affine(0.1, 0.6, 0.5, 1.0), ScalarMap::affine(0.25, 0.5, 0.5, 1.0), 1.0,
                                    1.0)});
  StateVector shape(space);
  for (std::size_t j = 0; j < space.size; ++j) shape[j] = std::sin(space.grid_point(j));
  const auto phi = HistorySegment::sample([&](double th) { return (1.0 + th) * shape; }, 1.0, 100);
  const auto tr = solve(p, phi, config(1e-2, 5.0));
  CHECK(tr.values().back().all_finite());
  CHECK(tr.diagnostics().delay_clamps == 0);
  CHECK(mild_residual(tr, {1.0, 2.5, 5.0}) <= 10.0 * 1e-2);
}
