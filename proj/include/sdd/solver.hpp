#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sdd/delay.hpp"
#include "sdd/history.hpp"
#include "sdd/operators.hpp"
#include "sdd/trajectory.hpp"

namespace sdd {

/// du/dt + (A + d) u = B(u(t - eta(u_t))).
struct ProblemSpec {
  EvolutionOperator op;
  Nonlinearity nonlinearity;
  DelayFunctional delay;

  double horizon() const noexcept { return delay.max_delay(); }
  const SpaceMeta& space() const noexcept { return op.space(); }
  /// Throws ConstructionError if operator, nonlinearity and delay disagree.
  void validate() const;
};

struct SolverConfig {
  double dt = 1e-3;
  double T = 1.0;
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  double integral_dx = 1e-2;
  std::size_t record_stride = 1;

  /// Throws ConstructionError; `horizon` is the problem's max delay.
  void validate(double horizon) const;
};

/// Knobs that change how a solve is carried out without changing what it
/// converges to. Used by the uniqueness probe.
struct SolveOptions {
  /// Randomise the first Picard iterate of every implicit step.
  std::optional<std::uint64_t> picard_seed;
  /// Relative size of the random offset applied to the first iterate.
  double picard_start_scale = 1e-3;
};

/// Mild solution of the initial value problem by the method of steps.
///
/// Each step is exponential Euler on the variation-of-constants formula,
///   u(s+dt) = e^{-(A+d)dt} u(s) + (A+d)^{-1}(1 - e^{-(A+d)dt}) B(u(s - eta(u_s))),
/// with the delayed term frozen at the step start. When the delay measured
/// at the step end is shorter than the step, the delayed argument depends on
/// the unknown endpoint; such steps evaluate the delayed term at the step end
/// and are resolved by Picard iteration until successive iterates differ by
/// less than picard_tol.
Trajectory solve(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi, const SolverConfig& cfg,
                 const SolveOptions& options = {});
Trajectory solve(const ProblemSpec& problem, const HistorySegment& phi, const SolverConfig& cfg,
                 const SolveOptions& options = {});

/// max over the sample times of | u(t) - e^{-(A+d)t} phi(0) - int_0^t e^{-(A+d)(t-s)} B(u(s - eta(u_s))) ds |,
/// with the integral taken by composite Simpson over the stored steps.
double mild_residual(const Trajectory& tr, const std::vector<double>& sample_times);

/// S_t phi = u_t.
HistorySegment evolution_map(const ProblemSpec& problem, const SolverConfig& cfg, const HistorySegment& phi,
                             double t);

}  // namespace sdd
