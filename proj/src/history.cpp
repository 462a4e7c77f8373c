#include "sdd/history.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

namespace {

std::vector<double> knot_times(const std::vector<HistorySegment::Knot>& knots) {
  std::vector<double> t;
  t.reserve(knots.size());
  for (const auto& k : knots) t.push_back(k.time);
  return t;
}

std::vector<StateVector> knot_values(std::vector<HistorySegment::Knot>& knots) {
  std::vector<StateVector> v;
  v.reserve(knots.size());
  for (auto& k : knots) v.push_back(std::move(k.value));
  return v;
}

}  // namespace

HistorySegment::HistorySegment(std::vector<Knot> knots, double horizon)
    : horizon_(horizon), times_(knot_times(knots)), values_(knot_values(knots)) {
  validate();
}

HistorySegment::HistorySegment(std::vector<double> times, std::vector<StateVector> values,
                               double horizon)
    : horizon_(horizon), times_(std::move(times)), values_(std::move(values)) {
  validate();
}

void HistorySegment::validate() const {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ConstructionError("history horizon must be positive and finite");
  }
  if (times_.empty()) throw ConstructionError("empty knots");
  if (times_.size() != values_.size()) throw ConstructionError("knot times and values differ in length");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) {
      throw ConstructionError("non-finite knot time at index " + std::to_string(i));
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw ConstructionError("unsorted times at index " + std::to_string(i));
    }
    if (!(values_[i].space() == values_[0].space())) {
      throw ConstructionError("mismatched space_meta at index " + std::to_string(i));
    }
    if (!values_[i].all_finite()) {
      throw ConstructionError("non-finite value at index " + std::to_string(i));
    }
  }
  if (times_.front() != -horizon_) {
    throw ConstructionError("first knot time must equal -r (index 0)");
  }
  if (times_.back() != 0.0) {
    throw ConstructionError("last knot time must equal 0 (index " + std::to_string(times_.size() - 1) + ")");
  }
}

StateVector HistorySegment::at(double theta) const {
  if (!(theta >= -horizon_ && theta <= 0.0)) {
    throw DomainError("theta=" + std::to_string(theta) + " outside [-r, 0]");
  }
  const auto it = std::lower_bound(times_.begin(), times_.end(), theta);
  const auto i = static_cast<std::size_t>(it - times_.begin());
  if (times_[i] == theta) return values_[i];
  const double w = (theta - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return lerp(values_[i - 1], values_[i], w);
}

std::vector<double> HistorySegment::knots_between(double lo, double hi) const {
  const auto first = std::upper_bound(times_.begin(), times_.end(), lo);
  const auto last = std::lower_bound(times_.begin(), times_.end(), hi);
  if (first >= last) return {};
  return {first, last};
}

double HistorySegment::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, v.norm());
  return m;
}

double HistorySegment::lipschitz_quotient() const {
  if (times_.size() < 2) throw ConstructionError("Lipschitz quotient needs at least two knots");
  double q = 0.0;
  for (std::size_t i = 1; i < times_.size(); ++i) {
    q = std::max(q, (values_[i] - values_[i - 1]).norm() / (times_[i] - times_[i - 1]));
  }
  return q;
}

HistorySegment HistorySegment::scaled(double s) const {
  std::vector<StateVector> v = values_;
  for (auto& x : v) x *= s;
  return HistorySegment(times_, std::move(v), horizon_);
}

double sup_distance(const HistorySegment& a, const HistorySegment& b) {
  std::vector<double> t(a.times().begin(), a.times().end());
  t.insert(t.end(), b.times().begin(), b.times().end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  double m = 0.0;
  for (double theta : t) {
    if (theta < -a.horizon() || theta < -b.horizon()) continue;
    m = std::max(m, (a.at(theta) - b.at(theta)).norm());
  }
  return m;
}

}  // namespace sdd
