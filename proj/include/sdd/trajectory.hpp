#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "sdd/diagnostics.hpp"
#include "sdd/history.hpp"

namespace sdd {

struct ProblemSpec;

/// The function u on [-r, T]: the initial segment followed by solved values
/// at increasing times s_0 = 0 < s_1 < ... with linear interpolation between.
class SolutionPath {
 public:
  explicit SolutionPath(HistorySegment initial);

  const HistorySegment& initial() const noexcept { return initial_; }
  double horizon() const noexcept { return initial_.horizon(); }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const StateVector> values() const noexcept { return values_; }
  double end_time() const noexcept { return times_.back(); }

  /// u(s) for s in [-r, end_time].
  StateVector value_at(double s) const;
  /// Path knot times strictly inside (lo, hi), initial-segment knots included.
  std::vector<double> knots_between(double lo, double hi) const;

  void push(double t, StateVector v);
  /// Overwrite the most recent value (used while iterating a step).
  void set_last(StateVector v) { values_.back() = std::move(v); }

 private:
  HistorySegment initial_;
  std::vector<double> times_;
  std::vector<StateVector> values_;
};

/// theta -> u(t + theta) on [-r, 0], read lazily from a SolutionPath.
class WindowView final : public History {
 public:
  WindowView(const SolutionPath& path, double t) : path_(path), t_(t) {}

  double horizon() const override { return path_.horizon(); }
  const SpaceMeta& space() const override { return path_.initial().space(); }
  StateVector at(double theta) const override;
  std::vector<double> knots_between(double lo, double hi) const override;

 private:
  const SolutionPath& path_;
  double t_;
};

struct StepRecord {
  double dt;
  /// 0 for an explicit step, otherwise the number of Picard sweeps.
  int picard_iterations;
  double delay;
};

/// A solved mild solution on [-r, T]. Immutable once returned by the solver.
class Trajectory {
 public:
  Trajectory(std::shared_ptr<const ProblemSpec> problem, SolutionPath path, std::vector<StepRecord> steps,
             Diagnostics diag, double integral_dx);

  const ProblemSpec& problem() const noexcept { return *problem_; }
  std::shared_ptr<const ProblemSpec> problem_handle() const noexcept { return problem_; }
  const HistorySegment& initial() const noexcept { return path_.initial(); }
  const SolutionPath& path() const noexcept { return path_; }
  std::span<const double> times() const noexcept { return path_.times(); }
  std::span<const StateVector> values() const noexcept { return path_.values(); }
  std::span<const StepRecord> steps() const noexcept { return steps_; }
  const Diagnostics& diagnostics() const noexcept { return diag_; }
  double end_time() const noexcept { return path_.end_time(); }
  double horizon() const noexcept { return path_.horizon(); }
  /// Quadrature width the delay integrals were evaluated with.
  double integral_dx() const noexcept { return integral_dx_; }

  StateVector value_at(double s) const { return path_.value_at(s); }
  /// The segment u_t as a stored HistorySegment. Throws DomainError for t outside [0, T].
  HistorySegment window(double t) const;
  /// max over solved times of |u(s)|.
  double max_norm() const;

 private:
  std::shared_ptr<const ProblemSpec> problem_;
  SolutionPath path_;
  std::vector<StepRecord> steps_;
  Diagnostics diag_;
  double integral_dx_;
};

/// CSV with header `t,v_0,...,v_{n-1}`. Initial-segment rows (negative
/// times) come first when `with_history` is set; solved rows follow, every
/// `stride`-th one plus the final time.
void write_csv(std::ostream& os, const Trajectory& tr, std::size_t stride = 1, bool with_history = true);

}  // namespace sdd
