#include "sdd/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

StateVector::StateVector(SpaceMeta space, std::vector<double> values)
    : space_(space), values_(std::move(values)) {
  if (values_.size() != space_.size) {
    throw ConstructionError("state has " + std::to_string(values_.size()) +
                            " entries but its space declares " + std::to_string(space_.size));
  }
}

StateVector::StateVector(SpaceMeta space) : space_(space), values_(space.size, 0.0) {}

double StateVector::norm() const noexcept {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(space_.cell_weight() * sum);
}

double StateVector::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double StateVector::mean() const noexcept {
  if (values_.empty()) return 0.0;
  const double sum = std::accumulate(values_.begin(), values_.end(), 0.0);
  if (space_.is_pde()) return sum * space_.cell_weight() / space_.length;
  return sum / static_cast<double>(values_.size());
}

bool StateVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void StateVector::require_same_space(const StateVector& other) const {
  if (!(space_ == other.space_)) throw ConstructionError("state vectors live in different spaces");
}

StateVector& StateVector::operator+=(const StateVector& other) {
  require_same_space(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

StateVector& StateVector::operator-=(const StateVector& other) {
  require_same_space(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

StateVector& StateVector::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

StateVector lerp(const StateVector& a, const StateVector& b, double w) {
  if (!(a.space() == b.space())) throw ConstructionError("state vectors live in different spaces");
  StateVector out(a.space());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = (1.0 - w) * av[i] + w * bv[i];
  return out;
}

}  // namespace sdd
