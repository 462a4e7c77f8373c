// Acceptance suite: one PASS/FAIL line per criterion, exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "sdd/config.hpp"
#include "sdd/verify.hpp"

using namespace sdd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt::format("exception: {}", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(secs < budget_s, fmt::format("runtime {:.2f}s < {}s", secs, budget_s));
  if (!out.pass) ++failures;
  fmt::print("[{}] {}. {}: {}\n", out.pass ? "PASS" : "FAIL", id, name, out.detail);
  std::fflush(stdout);
}

SolverConfig solver(double dt, double T, double tol = 1e-10) {
  SolverConfig c;
  c.dt = dt;
  c.T = T;
  c.picard_tol = tol;
  return c;
}

HistorySegment scalar_const(double v, double r) {
  return HistorySegment({-r, 0.0}, {StateVector::scalar(v), StateVector::scalar(v)}, r);
}

std::shared_ptr<const ProblemSpec> constant_delay() {
  return std::make_shared<const ProblemSpec>(ProblemSpec{EvolutionOperator::ode_diag({0.0}, 0.0),
                                                         Nonlinearity::local(PointwiseMap::affine(-1.0, 0.0), SpaceMeta::ode(1)),
                                                         DelayFunctional::constant(1.0, 1.0)});
}

/// u(2) for u' = -u(t-1), phi = 1: 1 - t on [0,1], then 1 - t + (t-1)^2/2 on [1,2].
constexpr double kExactAt2 = -0.5;

std::vector<DelayFunctional> structured_delays(double r) {
  std::vector<DelayFunctional> out;
  out.push_back(DelayFunctional::constant(0.6 * r, r));
  out.push_back(DelayFunctional::nested_point(ScalarMap::affine(0.1, 0.4, 0.0, 0.6), ScalarMap::affine(0.2, 0.3, 0.2, 0.6),
                                              r, r));
  DelayFunctional::SumOfNested sum;
  sum.terms.push_back({ScalarMap::affine(0.05, 0.1, 0.0, 0.3), ScalarMap::affine(0.1, 0.5, 0.3, 0.8), r});
  sum.terms.push_back({ScalarMap::affine(0.1, 0.2, 0.0, 0.3), ScalarMap::affine(-0.2, 0.6, 0.2, 0.8), 0.7 * r});
  sum.terms.push_back({ScalarMap::affine(0.05, 0.1, 0.0, 0.3), ScalarMap::constant(0.35), 0.8 * r});
  out.emplace_back(std::move(sum), r);
  const DelayFunctional::IntegralLimits lim{ScalarMap::affine(0.1, 0.3, 0.2, 0.5),
                                            ScalarMap::affine(0.1, 0.8, 0.6, 1.0), 0.9, 1.0};
  out.emplace_back(DelayFunctional::IntegralOuter{ScalarMap::affine(0.3, 0.2, 0.0, 1.0),
                                                  [](double th) { return 1.0 + 0.5 * th; }, lim},
                   r);
  out.emplace_back(DelayFunctional::IntegralInner{ScalarMap::affine(0.3, 0.3, 0.0, 1.0),
                                                  [](double th) { return std::exp(th); }, lim},
                   r);
  return out;
}

Outcome constant_delay_oracle() {
  Outcome o;
  const auto p = constant_delay();
  const auto phi = scalar_const(1.0, 1.0);
  const double got = solve(p, phi, solver(1e-3, 2.0)).value_at(2.0)[0];
  const double err = std::abs(got - kExactAt2);
  o.require(err <= 1e-4, fmt::format("|u(2) + 0.5| = {:.3e} <= 1e-4 at dt=1e-3", err));
  std::vector<double> errs;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) errs.push_back(std::abs(solve(p, phi, solver(dt, 2.0)).value_at(2.0)[0] - kExactAt2));
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    o.require(order >= 0.8 && order <= 1.2, fmt::format("order {:.3f} in [0.8, 1.2]", order));
  }
  return o;
}

Outcome semigroup_algebra() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> tt(0.0, 0.1);
  const auto op = EvolutionOperator::pde_dirichlet(1024, std::numbers::pi, 1.0, 0.1);
  double id_err = 0.0;
  double law_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    StateVector v(op.space());
    for (double& x : v.values()) x = u(rng);
    id_err = std::max(id_err, (op.semigroup_apply(0.0, v) - v).max_abs());
    const double t1 = tt(rng);
    const double t2 = tt(rng);
    law_err = std::max(law_err, (op.semigroup_apply(t1, op.semigroup_apply(t2, v)) - op.semigroup_apply(t1 + t2, v)).max_abs());
  }
  o.require(id_err <= 1e-13, fmt::format("identity {:.2e} <= 1e-13", id_err));
  o.require(law_err <= 1e-12, fmt::format("exponential law {:.2e} <= 1e-12", law_err));
  return o;
}

Outcome ignorance_fuzzing() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto phi = HistorySegment::sample([&](double) { return StateVector::scalar(u(rng)); }, 1.0, 40);
  for (const auto& eta : structured_delays(1.0)) {
    if (eta.variant_name() == "constant") continue;
    const auto rep = verify_ignorance(eta, phi, 1000, 5);
    o.require(rep.passes && rep.max_deviation == 0.0,
              fmt::format("{} {}x unchanged", eta.variant_name(), rep.trials));
  }
  const DelayFunctional planted(
      DelayFunctional::UserOpaque{[](const History& h) { return 0.5 + 0.1 * std::tanh(h.at(0.0)[0]); },
                                  [](const History&) { return SegmentReport{1.0, 0.5, {}}; }},
      1.0);
  const std::size_t seeds = 200;
  std::size_t caught = 0;
  for (std::size_t s = 0; s < seeds; ++s) caught += verify_ignorance(planted, phi, 1000, s).passes ? 0 : 1;
  o.require(caught >= 198, fmt::format("planted violation caught {}/{} >= 0.99", caught, seeds));
  return o;
}

Outcome uniqueness() {
  Outcome o;
  const auto cd = uniqueness_probe(constant_delay(), scalar_const(1.0, 1.0), solver(1e-3, 10.0), 5, 1);
  o.require(cd.certified, fmt::format("constant delay divergence {:.2e} <= {:.0e}", cd.max_divergence, cd.threshold));
  const auto rc = load_config(SDD_TEST_CONFIG_DIR "/nicholson_pde.json");
  auto cfg = rc.solver;
  cfg.T = 10.0;
  const auto pde = uniqueness_probe(rc.problem, rc.initial, cfg, 5, 2);
  o.require(pde.certified, fmt::format("Nicholson PDE divergence {:.2e} <= {:.0e}", pde.max_divergence, pde.threshold));
  return o;
}

Outcome dependence() {
  Outcome o;
  ConstantsRequest req;
  req.q = 0.5;
  req.seed = 3;
  const auto cd = continuous_dependence_probe(constant_delay(), scalar_const(1.0, 1.0), solver(1e-3, 1.0), req, 20, 1e-3, 4);
  o.require(cd.passes && cd.within == 20,
            fmt::format("constant delay {}/20, worst ratio {:.3f}", cd.within, cd.worst_ratio));
  const auto rc = load_config(SDD_TEST_CONFIG_DIR "/nicholson_sum.json");
  const auto ns = continuous_dependence_probe(rc.problem, rc.initial, rc.solver, req, 20, 1e-3, 5);
  o.require(ns.passes && ns.within == 20,
            fmt::format("Nicholson sum {}/20, worst ratio {:.3f}, t1 {:.3f}", ns.within, ns.worst_ratio,
                        ns.constants.t1));
  return o;
}

Outcome mild_defect() {
  Outcome o;
  for (const char* name : {"constant_delay.json", "nicholson_ode.json", "nicholson_pde.json", "nicholson_sum.json"}) {
    const auto rc = load_config(std::string(SDD_TEST_CONFIG_DIR) + "/" + name);
    auto cfg = rc.solver;
    cfg.T = std::min(cfg.T, 5.0);
    std::vector<double> samples;
    for (int i = 1; i <= 10; ++i) samples.push_back(cfg.T * i / 10.0);
    const double coarse = mild_residual(solve(rc.problem, rc.initial, cfg), samples);
    o.require(coarse <= 10.0 * cfg.dt, fmt::format("{} defect {:.2e} <= {:.0e}", name, coarse, 10.0 * cfg.dt));
    auto half = cfg;
    half.dt = cfg.dt / 2.0;
    const double fine = mild_residual(solve(rc.problem, rc.initial, half), samples);
    // An exact equilibrium has no first-order defect to halve.
    if (coarse <= 1e-10) {
      o.require(fine <= 1e-10, fmt::format("{} defect at dt/2 {:.1e} (trivial)", name, fine));
      continue;
    }
    const double ratio = coarse / fine;
    o.require(ratio >= 1.7 && ratio <= 2.3, fmt::format("{} halving ratio {:.3f}", name, ratio));
  }
  return o;
}

Outcome attractor() {
  Outcome o;
  const auto rc = load_config(SDD_TEST_CONFIG_DIR "/nicholson_attractor.json");
  const auto& space = rc.problem->space();
  const double r = rc.problem->horizon();
  const auto ensemble = make_ensemble(space, r, 8, 10.0, 1);
  double radius_max = 0.0;
  for (const auto& h : ensemble) radius_max = std::max(radius_max, h.sup_norm());
  o.require(radius_max <= 10.0, fmt::format("ensemble |phi|_C <= {:.2f}", radius_max));

  const auto d100 = dissipation_probe(rc.problem, rc.solver, ensemble, 100.0);
  const auto d200 = dissipation_probe(rc.problem, rc.solver, ensemble, 200.0);
  o.require(d100.dissipative && d200.dissipative, "dissipative");
  o.require(d200.radius <= 1.05 * d100.radius,
            fmt::format("radius {:.4f} -> {:.4f} non-increasing within 5%", d100.radius, d200.radius));

  std::vector<double> l0;
  double lt = 0.0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto ens = seed == 11u ? ensemble : make_ensemble(space, r, 8, 10.0, seed);
    const auto d = seed == 11u ? d100 : dissipation_probe(rc.problem, rc.solver, ens, 100.0);
    const auto h = holder_regularity_probe(d, 2000, seed);
    l0.push_back(h.holder_half_constant);
    lt = std::max(lt, h.lipschitz_constant);
  }
  const double mean = (l0[0] + l0[1] + l0[2]) / 3.0;
  double spread = 0.0;
  for (double x : l0) spread = std::max(spread, std::abs(x - mean) / mean);
  o.require(std::isfinite(mean) && mean > 0.0 && spread <= 0.2,
            fmt::format("L0 {:.3f}/{:.3f}/{:.3f} within 20% of mean", l0[0], l0[1], l0[2]));
  o.require(std::isfinite(lt), fmt::format("L_tilde {:.3f} finite", lt));
  return o;
}

Outcome equilibrium() {
  Outcome o;
  // b(w) = p w e^{-w} with p = e (a + d) has the positive fixed point w* = 1.
  const double a = 1.0;
  const double r = 1.0;
  for (auto& eta : structured_delays(r)) {
    const auto name = eta.variant_name();
    const auto p = std::make_shared<const ProblemSpec>(ProblemSpec{
        EvolutionOperator::ode_diag({a}, 0.0), Nonlinearity::nicholson(std::numbers::e * a, std::nullopt, SpaceMeta::ode(1)),
        std::move(eta)});
    const auto tr = solve(p, scalar_const(1.0, r), solver(1e-2, 10.0));
    double worst = 0.0;
    for (const auto& v : tr.values()) worst = std::max(worst, std::abs(v[0] - 1.0));
    o.require(worst <= 1e-8, fmt::format("{} drift {:.1e}", name, worst));
  }
  return o;
}

}  // namespace

int main() {
  criterion(1, "constant-delay oracle", 1.0, constant_delay_oracle);
  criterion(2, "semigroup algebra", 1.0, semigroup_algebra);
  criterion(3, "ignorance fuzzing", 10.0, ignorance_fuzzing);
  criterion(4, "uniqueness", 30.0, uniqueness);
  criterion(5, "continuous dependence", 60.0, dependence);
  criterion(6, "mild-residual defect", 30.0, mild_defect);
  criterion(7, "dissipation and attractor regularity", 300.0, attractor);
  criterion(8, "equilibrium preservation", 1.0, equilibrium);
  fmt::print("{} of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
