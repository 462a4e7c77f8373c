#include "sdd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

void ProblemSpec::validate() const {
  if (!(nonlinearity.space() == op.space())) {
    throw ConstructionError("nonlinearity and operator act on different spaces");
  }
}

void SolverConfig::validate(double horizon) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConstructionError("dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConstructionError("T must be positive");
  if (dt > horizon) throw ConstructionError("dt exceeds delay horizon");
  if (!(picard_tol > 0.0)) throw ConstructionError("picard_tol must be positive");
  if (picard_max_iters < 1) throw ConstructionError("picard_max_iters must be positive");
  if (!(integral_dx > 0.0)) throw ConstructionError("integral_dx must be positive");
}

namespace {

/// Spectral step factors for one step width.
struct StepFactors {
  double width = -1.0;
  std::vector<double> decay;
  std::vector<double> phi1;

  void prepare(const EvolutionOperator& op, double h) {
    if (h == width) return;
    width = h;
    decay = op.decay_factors(h);
    phi1 = op.phi1_factors(h);
  }
};

/// Step grid: multiples of dt, with a shorter final step if T is not a multiple.
std::vector<double> step_times(double dt, double T) {
  const auto n_full = static_cast<std::size_t>(std::floor(T / dt * (1.0 + 1e-12)));
  std::vector<double> t;
  t.reserve(n_full + 2);
  for (std::size_t m = 1; m <= n_full; ++m) t.push_back(static_cast<double>(m) * dt);
  if (t.empty() || t.back() < T * (1.0 - 1e-12)) {
    t.push_back(T);
  } else {
    t.back() = T;
  }
  return t;
}

}  // namespace

Trajectory solve(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi, const SolverConfig& cfg,
                 const SolveOptions& options) {
  const ProblemSpec& p = *problem;
  p.validate();
  const double r = p.horizon();
  cfg.validate(r);
  if (phi.horizon() != r) throw ConstructionError("initial segment horizon differs from the delay horizon");
  if (!(phi.space() == p.space())) throw ConstructionError("initial segment does not match the problem's space");

  const EvolutionOperator& op = p.op;
  Diagnostics diag;
  const DelayEvalOptions eval_opt{cfg.integral_dx, &diag};
  SolutionPath path(phi);
  std::vector<StepRecord> steps;
  const auto grid = step_times(cfg.dt, cfg.T);
  steps.reserve(grid.size());
  StepFactors f;
  std::vector<double> modes_next(op.space().size);

  // e^{-A h} u_m + phi1(h) B(w), assembled in modal space.
  auto advance = [&](const std::vector<double>& decayed, const StateVector& delayed_state) {
    const auto b = op.to_modes(p.nonlinearity.apply(delayed_state, &diag));
    for (std::size_t k = 0; k < b.size(); ++k) modes_next[k] = decayed[k] + f.phi1[k] * b[k];
    return op.from_modes(modes_next);
  };

  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double s = path.end_time();
    const double next = grid[m];
    f.prepare(op, next - s);

    auto decayed = op.to_modes(path.values().back());
    for (std::size_t k = 0; k < decayed.size(); ++k) decayed[k] *= f.decay[k];

    const double eta_start = p.delay.evaluate(WindowView(path, s), eval_opt);
    path.push(next, advance(decayed, path.value_at(s - eta_start)));

    double eta_end = p.delay.evaluate(WindowView(path, next), eval_opt);
    int sweeps = 0;
    if (next - eta_end > s) {
      // The delayed argument at the step end lies inside this step.
      StateVector v = path.values().back();
      if (options.picard_seed) {
        std::mt19937_64 rng(*options.picard_seed ^ (0x9e3779b97f4a7c15ULL * (m + 1)));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        StateVector offset(v.space());
        for (double& x : offset.values()) x = u(rng);
        const double n = offset.norm();
        if (n > 0.0) offset *= options.picard_start_scale * (1.0 + v.norm()) / n;
        v += offset;
        path.set_last(v);
      }
      double prev_diff = -1.0;
      double diff = 0.0;
      bool converged = false;
      while (sweeps < cfg.picard_max_iters) {
        ++sweeps;
        eta_end = p.delay.evaluate(WindowView(path, next), eval_opt);
        StateVector v_new = advance(decayed, path.value_at(next - eta_end));
        prev_diff = diff;
        diff = (v_new - v).norm();
        v = std::move(v_new);
        path.set_last(v);
        if (!v.all_finite()) break;
        if (diff < cfg.picard_tol) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        const double contraction = prev_diff > 0.0 ? diff / prev_diff : std::numeric_limits<double>::infinity();
        throw PicardDivergence("Picard iteration did not converge at t=" + std::to_string(next) +
                                   " (contraction estimate " + std::to_string(contraction) +
                                   "); decrease dt",
                               next, contraction);
      }
    }

    const StateVector& u = path.values().back();
    if (!u.all_finite()) throw SolverError("non-finite state at t=" + std::to_string(next), next);
    const auto [mn, mx] = std::minmax_element(u.values().begin(), u.values().end());
    if (*mx > 0.0 && *mn < -0.1 * *mx) ++diag.negativity_warnings;
    steps.push_back({next - s, sweeps, eta_end});
  }
  return Trajectory(std::move(problem), std::move(path), std::move(steps), diag, cfg.integral_dx);
}

Trajectory solve(const ProblemSpec& problem, const HistorySegment& phi, const SolverConfig& cfg,
                 const SolveOptions& options) {
  return solve(std::make_shared<const ProblemSpec>(problem), phi, cfg, options);
}

double mild_residual(const Trajectory& tr, const std::vector<double>& sample_times) {
  const ProblemSpec& p = tr.problem();
  const EvolutionOperator& op = p.op;
  const DelayEvalOptions eval_opt{tr.integral_dx(), nullptr};
  const auto times = tr.times();
  const std::size_t n_modes = op.space().size;
  const auto lambda = op.eigenvalues();

  auto integrand_modes = [&](double s) {
    const double eta = p.delay.evaluate(WindowView(tr.path(), s), eval_opt);
    return op.to_modes(p.nonlinearity.apply(tr.value_at(s - eta)));
  };

  std::vector<std::vector<double>> g;
  g.reserve(times.size());
  for (double s : times) g.push_back(integrand_modes(s));
  const auto phi0 = op.to_modes(tr.initial().values().back());

  double worst = 0.0;
  for (double t : sample_times) {
    if (!(t >= 0.0 && t <= tr.end_time())) throw DomainError("sample time outside [0, T]");
    if (t == 0.0) {
      worst = std::max(worst, (tr.values().front() - tr.initial().values().back()).norm());
      continue;
    }
    // Grid nodes up to t, then a partial cell to t if it is not a node.
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < times.size() && times[j] <= t; ++j) idx.push_back(j);
    std::vector<double> nodes;
    std::vector<const std::vector<double>*> vals;
    for (auto j : idx) {
      nodes.push_back(times[j]);
      vals.push_back(&g[j]);
    }
    std::vector<double> tail;
    if (nodes.back() < t) {
      tail = integrand_modes(t);
      nodes.push_back(t);
      vals.push_back(&tail);
    }
    std::vector<double> w(nodes.size(), 0.0);
    std::size_t i = 0;
    for (; i + 2 < nodes.size(); i += 2) {
      const double h0 = nodes[i + 1] - nodes[i];
      const double h1 = nodes[i + 2] - nodes[i + 1];
      const double hs = h0 + h1;
      w[i] += hs / 6.0 * (2.0 - h1 / h0);
      w[i + 1] += hs * hs * hs / (6.0 * h0 * h1);
      w[i + 2] += hs / 6.0 * (2.0 - h0 / h1);
    }
    if (i + 1 < nodes.size()) {
      const double h = nodes[i + 1] - nodes[i];
      w[i] += 0.5 * h;
      w[i + 1] += 0.5 * h;
    }
    std::vector<double> acc(n_modes, 0.0);
    for (std::size_t k = 0; k < n_modes; ++k) acc[k] = std::exp(-lambda[k] * t) * phi0[k];
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const auto& gj = *vals[j];
      for (std::size_t k = 0; k < n_modes; ++k) acc[k] += w[j] * std::exp(-lambda[k] * (t - nodes[j])) * gj[k];
    }
    worst = std::max(worst, (tr.value_at(t) - op.from_modes(acc)).norm());
  }
  return worst;
}

HistorySegment evolution_map(const ProblemSpec& problem, const SolverConfig& cfg, const HistorySegment& phi,
                             double t) {
  if (!(t >= 0.0)) throw DomainError("evolution map needs t >= 0");
  if (t == 0.0) return phi;
  SolverConfig c = cfg;
  c.T = t;
  return solve(problem, phi, c).window(t);
}

}  // namespace sdd
