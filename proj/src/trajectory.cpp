#include "sdd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "sdd/errors.hpp"

namespace sdd {

SolutionPath::SolutionPath(HistorySegment initial) : initial_(std::move(initial)) {
  times_.push_back(0.0);
  values_.push_back(initial_.values().back());
}

StateVector SolutionPath::value_at(double s) const {
  const double r = horizon();
  if (s <= 0.0) {
    if (s < -r) {
      // Rounding in t + theta can land a hair below -r.
      if (s < -r * (1.0 + 1e-12)) throw DomainError("time " + std::to_string(s) + " precedes the initial segment");
      s = -r;
    }
    return initial_.at(s);
  }
  if (s > times_.back()) {
    throw DomainError("time " + std::to_string(s) + " is beyond the solved range");
  }
  const auto it = std::lower_bound(times_.begin(), times_.end(), s);
  const auto i = static_cast<std::size_t>(it - times_.begin());
  if (times_[i] == s) return values_[i];
  const double w = (s - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return lerp(values_[i - 1], values_[i], w);
}

std::vector<double> SolutionPath::knots_between(double lo, double hi) const {
  std::vector<double> out;
  if (lo < 0.0) {
    for (double t : initial_.knots_between(lo, std::min(hi, 0.0))) out.push_back(t);
    if (hi > 0.0) out.push_back(0.0);
  }
  if (hi > 0.0) {
    const auto first = std::upper_bound(times_.begin(), times_.end(), std::max(lo, 0.0));
    const auto last = std::lower_bound(times_.begin(), times_.end(), hi);
    if (first < last) out.insert(out.end(), first, last);
  }
  return out;
}

void SolutionPath::push(double t, StateVector v) {
  if (!(t > times_.back())) throw SolverError("solution times must increase", t);
  times_.push_back(t);
  values_.push_back(std::move(v));
}

StateVector WindowView::at(double theta) const {
  if (!(theta >= -horizon() && theta <= 0.0)) {
    throw DomainError("theta=" + std::to_string(theta) + " outside [-r, 0]");
  }
  return path_.value_at(t_ + theta);
}

std::vector<double> WindowView::knots_between(double lo, double hi) const {
  auto k = path_.knots_between(t_ + lo, t_ + hi);
  std::vector<double> out;
  out.reserve(k.size());
  for (double s : k) {
    const double theta = s - t_;
    if (theta > lo && theta < hi && (out.empty() || theta > out.back())) out.push_back(theta);
  }
  return out;
}

Trajectory::Trajectory(std::shared_ptr<const ProblemSpec> problem, SolutionPath path, std::vector<StepRecord> steps,
                       Diagnostics diag, double integral_dx)
    : problem_(std::move(problem)),
      path_(std::move(path)),
      steps_(std::move(steps)),
      diag_(diag),
      integral_dx_(integral_dx) {}

HistorySegment Trajectory::window(double t) const {
  if (!(t >= 0.0 && t <= end_time())) throw DomainError("window time outside [0, T]");
  const double r = horizon();
  std::vector<double> th{-r};
  std::vector<StateVector> vals{path_.value_at(t - r)};
  const auto& phi = path_.initial();
  // Initial-segment knots that are still inside the window, stored values reused.
  for (std::size_t j = 0; j + 1 < phi.knot_count(); ++j) {
    const double tau = phi.times()[j];
    if (tau > t - r) {
      const double theta = tau - t;
      if (theta > th.back() && theta < 0.0) {
        th.push_back(theta);
        vals.push_back(phi.values()[j]);
      }
    }
  }
  const auto times = path_.times();
  const auto values = path_.values();
  auto i = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t - r) - times.begin());
  for (; i < times.size() && times[i] < t; ++i) {
    const double theta = times[i] - t;
    if (theta > th.back() && theta < 0.0) {
      th.push_back(theta);
      vals.push_back(values[i]);
    }
  }
  th.push_back(0.0);
  vals.push_back(path_.value_at(t));
  return HistorySegment(std::move(th), std::move(vals), r);
}

double Trajectory::max_norm() const {
  double m = 0.0;
  for (const auto& v : values()) m = std::max(m, v.norm());
  return m;
}

namespace {

void write_row(std::ostream& os, double t, const StateVector& v) {
  os << fmt::format("{:.17g}", t);
  for (double x : v.values()) os << ',' << fmt::format("{:.17g}", x);
  os << '\n';
}

}  // namespace

void write_csv(std::ostream& os, const Trajectory& tr, std::size_t stride, bool with_history) {
  if (stride == 0) stride = 1;
  const std::size_t n = tr.initial().space().size;
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",v_" << i;
  os << '\n';
  if (with_history) {
    const auto& phi = tr.initial();
    for (std::size_t j = 0; j + 1 < phi.knot_count(); ++j) write_row(os, phi.times()[j], phi.values()[j]);
  }
  const auto times = tr.times();
  const auto values = tr.values();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i % stride == 0 || i + 1 == times.size()) write_row(os, times[i], values[i]);
  }
}

}  // namespace sdd
