#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sdd {

/// Describes the space a StateVector lives in.
///
/// ODE states are plain R^n vectors with the Euclidean norm. PDE states hold
/// field samples at the interior points x_j = j * length / (n + 1), j = 1..n,
/// of a Dirichlet problem on (0, length); their norm is the rectangle-rule
/// L2 norm with weight length / (n + 1).
struct SpaceMeta {
  enum class Kind { ode, pde_grid };

  Kind kind = Kind::ode;
  std::size_t size = 0;
  double length = 0.0;  // only meaningful for pde_grid

  static SpaceMeta ode(std::size_t n) { return {Kind::ode, n, 0.0}; }
  static SpaceMeta pde_grid(std::size_t n_grid, double length) {
    return {Kind::pde_grid, n_grid, length};
  }

  bool is_pde() const noexcept { return kind == Kind::pde_grid; }
  /// Quadrature weight of one grid cell (1 for ODE states).
  double cell_weight() const noexcept {
    return is_pde() ? length / static_cast<double>(size + 1) : 1.0;
  }
  /// Grid abscissa of interior point j (0-based).
  double grid_point(std::size_t j) const noexcept {
    return static_cast<double>(j + 1) * cell_weight();
  }

  friend bool operator==(const SpaceMeta&, const SpaceMeta&) = default;
};

class StateVector {
 public:
  StateVector() = default;
  StateVector(SpaceMeta space, std::vector<double> values);
  /// Zero state in the given space.
  explicit StateVector(SpaceMeta space);

  static StateVector scalar(double v) { return StateVector(SpaceMeta::ode(1), {v}); }

  const SpaceMeta& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Euclidean norm (ODE) or rectangle-rule L2 norm (PDE grid).
  double norm() const noexcept;
  double max_abs() const noexcept;
  /// Spatial mean: arithmetic mean for ODE states, (1/length) * integral for PDE grids.
  double mean() const noexcept;
  bool all_finite() const noexcept;

  StateVector& operator+=(const StateVector& other);
  StateVector& operator-=(const StateVector& other);
  StateVector& operator*=(double s) noexcept;

  friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
  friend StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
  friend StateVector operator*(double s, StateVector a) { return a *= s; }
  friend StateVector operator*(StateVector a, double s) { return a *= s; }
  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  void require_same_space(const StateVector& other) const;

  SpaceMeta space_;
  std::vector<double> values_;
};

/// (1 - w) * a + w * b, without temporaries beyond the result.
StateVector lerp(const StateVector& a, const StateVector& b, double w);

}  // namespace sdd
