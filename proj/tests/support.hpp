#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "sdd/solver.hpp"

namespace sdd::test {

inline HistorySegment scalar_segment(std::vector<double> times, std::vector<double> values, double r) {
  std::vector<StateVector> v;
  for (double x : values) v.push_back(StateVector::scalar(x));
  return HistorySegment(std::move(times), std::move(v), r);
}

template <class F>
HistorySegment scalar_sampled(F&& f, double r, std::size_t n = 100) {
  return HistorySegment::sample([&](double th) { return StateVector::scalar(f(th)); }, r, n);
}

/// u' = -u(t - 1): A = 0, d = 0, b(w) = -w, eta = 1.
inline std::shared_ptr<const ProblemSpec> constant_delay_problem(double c = 1.0) {
  return std::make_shared<const ProblemSpec>(ProblemSpec{
      EvolutionOperator::ode_diag({0.0}, 0.0),
      Nonlinearity::local(PointwiseMap::affine(-1.0, 0.0), SpaceMeta::ode(1)),
      DelayFunctional::constant(c, 1.0)});
}

/// Random scalar segment with values in [lo, hi].
inline HistorySegment random_scalar_segment(std::mt19937_64& rng, double r, double lo, double hi,
                                            std::size_t n = 40) {
  std::uniform_real_distribution<double> u(lo, hi);
  return scalar_sampled([&](double) { return u(rng); }, r, n);
}

}  // namespace sdd::test
