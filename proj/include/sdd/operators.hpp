#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sdd/diagnostics.hpp"
#include "sdd/state.hpp"

namespace sdd {

/// Orthogonal sine transform on n interior grid points (DST-I).
///
/// forward: c_k = 2/(n+1) * sum_j v_j sin(pi (j+1)(k+1) / (n+1))
/// inverse: v_j = sum_k c_k sin(pi (j+1)(k+1) / (n+1))
///
/// so that a grid vector is expanded in the Dirichlet eigenfunctions
/// sin(k pi x / length) sampled at x_j. Backed by FFTW's RODFT00.
class SineTransform {
 public:
  explicit SineTransform(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<const double> in, std::span<double> out) const;
  void inverse(std::span<const double> in, std::span<double> out) const;

 private:
  struct Plan;
  std::size_t n_;
  std::shared_ptr<const Plan> plan_;
};

/// The shifted operator A + d*I together with its exact semigroup.
///
/// Two kinds are supported: a diagonal matrix on R^n, and nu * (-d^2/dx^2)
/// on (0, length) with Dirichlet conditions, discretised by its first n
/// sine modes on the n-point interior grid.
class EvolutionOperator {
 public:
  static EvolutionOperator ode_diag(std::vector<double> eigenvalues, double shift);
  static EvolutionOperator pde_dirichlet(std::size_t n_modes, double length, double diffusion,
                                         double shift);

  const SpaceMeta& space() const noexcept { return space_; }
  bool is_pde() const noexcept { return space_.is_pde(); }
  double shift() const noexcept { return shift_; }
  double diffusion() const noexcept { return diffusion_; }
  /// Eigenvalues of A + d*I, increasing for the PDE kind.
  std::span<const double> eigenvalues() const noexcept { return eigen_; }
  double min_eigenvalue() const noexcept;

  /// exp(-(A + d) t) v. Throws DomainError for t < 0.
  StateVector semigroup_apply(double t, const StateVector& v) const;
  /// (A + d)^{-1} (1 - exp(-(A + d) t)) v, i.e. int_0^t exp(-(A+d) s) ds v.
  StateVector phi1_apply(double t, const StateVector& v) const;

  /// Modal coefficients (identity for ODE kinds).
  std::vector<double> to_modes(const StateVector& v) const;
  StateVector from_modes(std::span<const double> modes) const;

  /// exp(-lambda t) per mode.
  std::vector<double> decay_factors(double t) const;
  /// (1 - exp(-lambda t)) / lambda per mode, with the limit t at lambda = 0.
  std::vector<double> phi1_factors(double t) const;

 private:
  EvolutionOperator() = default;

  SpaceMeta space_;
  double shift_ = 0.0;
  double diffusion_ = 0.0;
  std::vector<double> eigen_;
  std::optional<SineTransform> dst_;
};

/// A real function b: R -> R applied pointwise.
class PointwiseMap {
 public:
  struct Affine {
    double slope;
    double intercept;
  };
  struct Nicholson {
    double p;
  };
  struct User {
    std::function<double(double)> fn;
    double lipschitz;
    bool bounded;
  };

  static PointwiseMap affine(double slope, double intercept) { return PointwiseMap(Affine{slope, intercept}); }
  static PointwiseMap nicholson(double p);
  static PointwiseMap user(std::function<double(double)> fn, double lipschitz, bool bounded = false) {
    return PointwiseMap(User{std::move(fn), lipschitz, bounded});
  }

  double operator()(double w, Diagnostics* diag = nullptr) const;
  /// Lipschitz constant of b on [lo, hi]; hi may be +infinity.
  double lipschitz(double lo, double hi) const;
  bool bounded() const noexcept;
  /// sup |b| when bounded, on w >= 0 for Nicholson.
  double sup_abs() const;

  const std::variant<Affine, Nicholson, User>& kind() const noexcept { return kind_; }

 private:
  explicit PointwiseMap(std::variant<Affine, Nicholson, User> k) : kind_(std::move(k)) {}
  std::variant<Affine, Nicholson, User> kind_;
};

/// Convolution kernel f on Omega - Omega.
class Kernel {
 public:
  static Kernel gaussian(double alpha);
  static Kernel constant(double value);
  static Kernel user(std::function<double(double)> f);

  double operator()(double s) const { return f_(s); }
  /// Gaussian width parameter, if this is a Gaussian kernel.
  std::optional<double> alpha() const noexcept { return alpha_; }

 private:
  Kernel(std::function<double(double)> f, std::optional<double> alpha) : f_(std::move(f)), alpha_(alpha) {}
  std::function<double(double)> f_;
  std::optional<double> alpha_;
};

/// The delayed nonlinearity B: state -> state.
///
///   local:    B(v)(x) = b(v(x))
///   nonlocal: B(v)(x) = int_Omega b(v(y)) f(x - y) dy   (rectangle rule on the grid)
class Nonlinearity {
 public:
  static Nonlinearity local(PointwiseMap b, SpaceMeta space);
  static Nonlinearity nonlocal(PointwiseMap b, const Kernel& f, SpaceMeta space);
  /// b(w) = p w e^{-w}; with a kernel it is nonlocal, without it is local.
  static Nonlinearity nicholson(double p, const std::optional<Kernel>& f, SpaceMeta space);

  bool is_local() const noexcept { return kernel_.empty(); }
  const SpaceMeta& space() const noexcept { return space_; }
  const PointwiseMap& pointwise() const noexcept { return b_; }
  /// max of sampled |f| over grid differences (0 for local maps).
  double kernel_bound() const noexcept { return kernel_bound_; }
  bool bounded() const noexcept { return b_.bounded(); }

  StateVector apply(const StateVector& v, Diagnostics* diag = nullptr) const;

  /// L_B on the state range [lo, hi]: L_b for local maps, L_b * M_f * |Omega| for nonlocal.
  double lipschitz_bound(double lo, double hi) const;
  /// Symmetric range [-R, R].
  double lipschitz_bound(double range_bound) const { return lipschitz_bound(-range_bound, range_bound); }

 private:
  Nonlinearity(PointwiseMap b, SpaceMeta space) : b_(std::move(b)), space_(space) {}

  PointwiseMap b_;
  SpaceMeta space_;
  std::vector<double> kernel_;  // n x n, row-major, includes the cell weight
  double kernel_bound_ = 0.0;
};

}  // namespace sdd
