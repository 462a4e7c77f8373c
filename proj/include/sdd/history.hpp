#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sdd/state.hpp"

namespace sdd {

/// Read access to a function on [-r, 0] with state values.
///
/// Delay functionals are written against this interface so that they can be
/// evaluated on stored segments as well as on windows of a trajectory that is
/// still being computed.
class History {
 public:
  virtual ~History() = default;

  virtual double horizon() const = 0;
  virtual const SpaceMeta& space() const = 0;
  /// Value at theta in [-r, 0]. Throws DomainError outside.
  virtual StateVector at(double theta) const = 0;
  /// Knot abscissae strictly inside (lo, hi), increasing.
  virtual std::vector<double> knots_between(double lo, double hi) const = 0;
};

/// A piecewise-linear function on [-r, 0]: the computational representative
/// of an element of C([-r, 0]; state space).
class HistorySegment final : public History {
 public:
  struct Knot {
    double time;
    StateVector value;
  };

  HistorySegment(std::vector<Knot> knots, double horizon);
  HistorySegment(std::vector<double> times, std::vector<StateVector> values, double horizon);

  /// theta -> value on a uniform grid of `n_intervals` intervals.
  template <class F>
  static HistorySegment sample(F&& f, double horizon, std::size_t n_intervals) {
    std::vector<double> times(n_intervals + 1);
    std::vector<StateVector> values;
    values.reserve(n_intervals + 1);
    for (std::size_t i = 0; i <= n_intervals; ++i) {
      times[i] = i == n_intervals ? 0.0 : -horizon + horizon * static_cast<double>(i) / static_cast<double>(n_intervals);
      values.push_back(f(times[i]));
    }
    return HistorySegment(std::move(times), std::move(values), horizon);
  }

  double horizon() const override { return horizon_; }
  const SpaceMeta& space() const override { return values_.front().space(); }
  StateVector at(double theta) const override;
  std::vector<double> knots_between(double lo, double hi) const override;

  std::span<const double> times() const noexcept { return times_; }
  std::span<const StateVector> values() const noexcept { return values_; }
  std::size_t knot_count() const noexcept { return times_.size(); }

  /// Max over knots of the state norm. This is the sup norm of the
  /// piecewise-linear representative because every state norm is convex.
  double sup_norm() const;

  /// Max over adjacent knots of |dv| / dt: the exact Lipschitz constant of
  /// the piecewise-linear representative.
  double lipschitz_quotient() const;

  /// Same knots, every value multiplied by `s`.
  HistorySegment scaled(double s) const;

 private:
  void validate() const;

  double horizon_;
  std::vector<double> times_;
  std::vector<StateVector> values_;
};

/// sup over theta of |a(theta) - b(theta)|, evaluated on the union of both knot sets.
double sup_distance(const HistorySegment& a, const HistorySegment& b);

}  // namespace sdd
