#include "sdd/operators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

// ---------------------------------------------------------------------------
// SineTransform

struct SineTransform::Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

namespace {
// FFTW planning is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

SineTransform::SineTransform(std::size_t n) : n_(n) {
  if (n == 0) throw ConstructionError("sine transform needs at least one point");
  auto plan = std::make_shared<Plan>();
  std::vector<double> in(n), out(n);
  {
    std::lock_guard lock(planner_mutex());
    plan->plan = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(), FFTW_RODFT00,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (!plan->plan) throw ConstructionError("FFTW could not plan a sine transform of size " + std::to_string(n));
  plan_ = std::move(plan);
}

void SineTransform::forward(std::span<const double> in, std::span<double> out) const {
  // RODFT00 is out-of-place here; the plan was made with distinct buffers.
  std::vector<double> tmp(in.begin(), in.end());
  fftw_execute_r2r(plan_->plan, tmp.data(), out.data());
  const double scale = 1.0 / static_cast<double>(n_ + 1);
  for (double& c : out) c *= scale;
}

void SineTransform::inverse(std::span<const double> in, std::span<double> out) const {
  std::vector<double> tmp(in.begin(), in.end());
  fftw_execute_r2r(plan_->plan, tmp.data(), out.data());
  for (double& v : out) v *= 0.5;
}

// ---------------------------------------------------------------------------
// EvolutionOperator

EvolutionOperator EvolutionOperator::ode_diag(std::vector<double> eigenvalues, double shift) {
  if (eigenvalues.empty()) throw ConstructionError("ode operator needs at least one eigenvalue");
  if (!(shift >= 0.0)) throw ConstructionError("shift d must be nonnegative");
  for (double a : eigenvalues) {
    if (!std::isfinite(a)) throw ConstructionError("non-finite eigenvalue");
  }
  EvolutionOperator op;
  op.space_ = SpaceMeta::ode(eigenvalues.size());
  op.shift_ = shift;
  op.eigen_ = std::move(eigenvalues);
  for (double& a : op.eigen_) a += shift;
  return op;
}

EvolutionOperator EvolutionOperator::pde_dirichlet(std::size_t n_modes, double length, double diffusion,
                                                   double shift) {
  if (n_modes == 0) throw ConstructionError("n_modes must be positive");
  if (!(length > 0.0)) throw ConstructionError("domain length must be positive");
  if (!(diffusion > 0.0)) throw ConstructionError("diffusion must be positive");
  if (!(shift >= 0.0)) throw ConstructionError("shift d must be nonnegative");
  EvolutionOperator op;
  op.space_ = SpaceMeta::pde_grid(n_modes, length);
  op.shift_ = shift;
  op.diffusion_ = diffusion;
  op.eigen_.resize(n_modes);
  for (std::size_t k = 1; k <= n_modes; ++k) {
    const double wave = static_cast<double>(k) * std::numbers::pi / length;
    op.eigen_[k - 1] = diffusion * wave * wave + shift;
  }
  op.dst_.emplace(n_modes);
  return op;
}

double EvolutionOperator::min_eigenvalue() const noexcept {
  return *std::min_element(eigen_.begin(), eigen_.end());
}

std::vector<double> EvolutionOperator::to_modes(const StateVector& v) const {
  if (!(v.space() == space_)) throw ConstructionError("state does not match the operator's space");
  std::vector<double> c(v.size());
  if (dst_) {
    dst_->forward(v.values(), c);
  } else {
    std::copy(v.values().begin(), v.values().end(), c.begin());
  }
  return c;
}

StateVector EvolutionOperator::from_modes(std::span<const double> modes) const {
  StateVector v(space_);
  if (dst_) {
    dst_->inverse(modes, v.values());
  } else {
    std::copy(modes.begin(), modes.end(), v.values().begin());
  }
  return v;
}

std::vector<double> EvolutionOperator::decay_factors(double t) const {
  if (!(t >= 0.0)) throw DomainError("semigroup is only defined for t >= 0");
  std::vector<double> f(eigen_.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::exp(-eigen_[k] * t);
  return f;
}

std::vector<double> EvolutionOperator::phi1_factors(double t) const {
  if (!(t >= 0.0)) throw DomainError("semigroup is only defined for t >= 0");
  std::vector<double> f(eigen_.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double x = eigen_[k] * t;
    if (std::abs(x) < 1e-8) {
      f[k] = t * (1.0 - 0.5 * x);
    } else {
      f[k] = -std::expm1(-x) / eigen_[k];
    }
  }
  return f;
}

StateVector EvolutionOperator::semigroup_apply(double t, const StateVector& v) const {
  const auto f = decay_factors(t);
  auto c = to_modes(v);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= f[k];
  return from_modes(c);
}

StateVector EvolutionOperator::phi1_apply(double t, const StateVector& v) const {
  const auto f = phi1_factors(t);
  auto c = to_modes(v);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= f[k];
  return from_modes(c);
}

// ---------------------------------------------------------------------------
// PointwiseMap

namespace {

// exp(-w) overflows for w below about -709.
constexpr double kMaxExponent = 700.0;

double nicholson_slope(double p, double w) { return p * (1.0 - w) * std::exp(-w); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

PointwiseMap PointwiseMap::nicholson(double p) {
  if (!(p > 0.0)) throw ConstructionError("Nicholson p must be positive");
  return PointwiseMap(Nicholson{p});
}

double PointwiseMap::operator()(double w, Diagnostics* diag) const {
  return std::visit(overloaded{
                        [&](const Affine& a) { return a.slope * w + a.intercept; },
                        [&](const Nicholson& n) {
                          double e = -w;
                          if (e > kMaxExponent) {
                            if (diag) ++diag->saturations;
                            e = kMaxExponent;
                          }
                          return n.p * w * std::exp(e);
                        },
                        [&](const User& u) { return u.fn(w); },
                    },
                    kind_);
}

double PointwiseMap::lipschitz(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  return std::visit(overloaded{
                        [](const Affine& a) { return std::abs(a.slope); },
                        [&](const Nicholson& n) {
                          if (!std::isfinite(lo)) return std::numeric_limits<double>::infinity();
                          // |(1 - w) e^{-w}| decays to below 1e-20 past w = 60.
                          const double top = std::min(hi, 60.0);
                          if (top <= lo) return std::abs(nicholson_slope(n.p, lo));
                          constexpr int samples = 200000;
                          double m = std::max(std::abs(nicholson_slope(n.p, lo)),
                                              std::abs(nicholson_slope(n.p, top)));
                          for (int i = 1; i < samples; ++i) {
                            const double w = lo + (top - lo) * i / samples;
                            m = std::max(m, std::abs(nicholson_slope(n.p, w)));
                          }
                          return m;
                        },
                        [](const User& u) { return u.lipschitz; },
                    },
                    kind_);
}

bool PointwiseMap::bounded() const noexcept {
  return std::visit(overloaded{
                        [](const Affine& a) { return a.slope == 0.0; },
                        [](const Nicholson&) { return true; },
                        [](const User& u) { return u.bounded; },
                    },
                    kind_);
}

double PointwiseMap::sup_abs() const {
  return std::visit(overloaded{
                        [](const Affine& a) {
                          return a.slope == 0.0 ? std::abs(a.intercept) : std::numeric_limits<double>::infinity();
                        },
                        [](const Nicholson& n) { return n.p / std::numbers::e; },
                        [](const User& u) {
                          return u.bounded ? std::numeric_limits<double>::quiet_NaN()
                                           : std::numeric_limits<double>::infinity();
                        },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------
// Kernel

Kernel Kernel::gaussian(double alpha) {
  if (!(alpha > 0.0)) throw ConstructionError("Gaussian kernel alpha must be positive");
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * alpha);
  return Kernel([norm, alpha](double s) { return norm * std::exp(-s * s / (4.0 * alpha)); }, alpha);
}

Kernel Kernel::constant(double value) {
  return Kernel([value](double) { return value; }, std::nullopt);
}

Kernel Kernel::user(std::function<double(double)> f) { return Kernel(std::move(f), std::nullopt); }

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::local(PointwiseMap b, SpaceMeta space) {
  if (space.size == 0) throw ConstructionError("nonlinearity needs a nonempty space");
  return Nonlinearity(std::move(b), space);
}

Nonlinearity Nonlinearity::nonlocal(PointwiseMap b, const Kernel& f, SpaceMeta space) {
  if (!space.is_pde()) throw ConstructionError("nonlocal nonlinearity requires a PDE grid space");
  Nonlinearity nl(std::move(b), space);
  const std::size_t n = space.size;
  const double h = space.cell_weight();
  nl.kernel_.resize(n * n);
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double fij = f(space.grid_point(i) - space.grid_point(j));
      if (!std::isfinite(fij)) throw ConstructionError("kernel is not finite on the grid");
      bound = std::max(bound, std::abs(fij));
      nl.kernel_[i * n + j] = h * fij;
    }
  }
  nl.kernel_bound_ = bound;
  return nl;
}

Nonlinearity Nonlinearity::nicholson(double p, const std::optional<Kernel>& f, SpaceMeta space) {
  if (f) return nonlocal(PointwiseMap::nicholson(p), *f, space);
  return local(PointwiseMap::nicholson(p), space);
}

StateVector Nonlinearity::apply(const StateVector& v, Diagnostics* diag) const {
  if (!(v.space() == space_)) throw ConstructionError("state does not match the nonlinearity's space");
  const std::size_t n = v.size();
  StateVector bv(space_);
  for (std::size_t i = 0; i < n; ++i) bv[i] = b_(v[i], diag);
  if (is_local()) return bv;
  StateVector out(space_);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = kernel_.data() + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * bv[j];
    out[i] = acc;
  }
  return out;
}

double Nonlinearity::lipschitz_bound(double lo, double hi) const {
  const double lb = b_.lipschitz(lo, hi);
  if (is_local()) return lb;
  return lb * kernel_bound_ * space_.length;
}

}  // namespace sdd
