#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdd/diagnostics.hpp"
#include "sdd/history.hpp"

namespace sdd {

/// A map from a state to a real number with a declared output range.
///
/// Affine and table maps act on the spatial mean of the state. Outputs are
/// clamped into [lo, hi]; each clamp is counted in Diagnostics.
class ScalarMap {
 public:
  struct Affine {
    double a;
    double b;
  };
  /// Monotone lookup on the mean: linear interpolation or right-continuous steps.
  struct Table {
    std::vector<double> x;
    std::vector<double> y;
    bool step = false;
  };
  struct User {
    std::function<double(const StateVector&)> fn;
  };

  static ScalarMap affine(double a, double b, double lo, double hi, std::optional<double> lipschitz = {});
  static ScalarMap constant(double c) { return affine(0.0, c, c, c, 0.0); }
  static ScalarMap table(std::vector<double> x, std::vector<double> y, bool step, double lo, double hi,
                         std::optional<double> lipschitz = {});
  static ScalarMap user(std::function<double(const StateVector&)> fn, double lo, double hi,
                        std::optional<double> lipschitz = {});

  double operator()(const StateVector& w, Diagnostics* diag = nullptr) const;
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::optional<double> declared_lipschitz() const noexcept { return lipschitz_; }
  const std::variant<Affine, Table, User>& kind() const noexcept { return kind_; }

 private:
  ScalarMap(std::variant<Affine, Table, User> k, double lo, double hi, std::optional<double> lipschitz);

  std::variant<Affine, Table, User> kind_;
  double lo_;
  double hi_;
  std::optional<double> lipschitz_;
};

/// The delayed segment [-theta_upper, -theta_lower] on which a functional depends.
struct SegmentReport {
  double theta_upper = 0.0;
  double theta_lower = 0.0;
  /// theta values (in [-r, 0]) read to determine the segment and the delay.
  std::vector<double> anchors_used;
};

struct DelayEvalOptions {
  /// Maximum quadrature cell width for the integral variants.
  double integral_dx = 1e-2;
  Diagnostics* diag = nullptr;
};

/// State-dependent delay eta: C([-r,0]) -> [0, r], built from a fixed set of
/// combinators whose delayed segments are known in closed form.
class DelayFunctional {
 public:
  struct Constant {
    double value;
  };
  /// eta(phi) = p(phi(-chi(phi(-anchor)))).
  struct NestedPoint {
    ScalarMap p;
    ScalarMap chi;
    double anchor;
  };
  /// eta(phi) = sum_k p_k(phi(-chi_k(phi(-anchor_k)))), clamped to [0, r].
  struct SumOfNested {
    std::vector<NestedPoint> terms;
  };
  /// Integration limits -chi2(phi(-anchor2)) .. -chi1(phi(-anchor1)).
  struct IntegralLimits {
    ScalarMap chi1;
    ScalarMap chi2;
    double anchor1;
    double anchor2;
  };
  /// eta(phi) = int p(phi(theta)) g(theta) dtheta, clamped to [0, r].
  struct IntegralOuter {
    ScalarMap p;
    std::function<double(double)> weight;
    IntegralLimits limits;
  };
  /// eta(phi) = p(int phi(theta) g(theta) dtheta).
  struct IntegralInner {
    ScalarMap p;
    std::function<double(double)> weight;
    IntegralLimits limits;
  };
  /// Arbitrary callable. The segment functions are optional declarations
  /// that can only be falsified by fuzzing, never proven.
  struct UserOpaque {
    std::function<double(const History&)> fn;
    std::function<SegmentReport(const History&)> segment;  // may be empty
  };

  using Variant = std::variant<Constant, NestedPoint, SumOfNested, IntegralOuter, IntegralInner, UserOpaque>;

  DelayFunctional(Variant v, double max_delay);

  static DelayFunctional constant(double c, double r) { return {Constant{c}, r}; }
  static DelayFunctional nested_point(ScalarMap p, ScalarMap chi, double anchor, double r) {
    return {NestedPoint{std::move(p), std::move(chi), anchor}, r};
  }

  double max_delay() const noexcept { return r_; }
  const Variant& variant() const noexcept { return v_; }
  /// Everything except UserOpaque.
  bool is_structured() const noexcept { return !std::holds_alternative<UserOpaque>(v_); }
  std::string variant_name() const;

  /// Delay value in [0, r].
  double evaluate(const History& h, const DelayEvalOptions& opt = {}) const;
  /// The delayed segment. Throws EvaluationError("segment unknown") for an
  /// opaque functional without declared segment functions.
  SegmentReport dependency_segment(const History& h) const;

 private:
  Variant v_;
  double r_;
};

struct IgnoranceReport {
  bool passes = true;
  std::size_t trials = 0;
  double max_deviation = 0.0;
  SegmentReport segment;
  /// First perturbed history whose delay differs from the base value.
  std::optional<HistorySegment> counterexample;
  std::string note;
};

/// Fuzz the ignorance property: perturb h away from its delayed segment and
/// check that the delay value is unchanged (bit-exact for structured
/// variants, within 1e-12 for opaque ones).
IgnoranceReport verify_ignorance(const DelayFunctional& eta, const HistorySegment& h, std::size_t trials,
                                 std::uint64_t seed, const DelayEvalOptions& opt = {});
/// Same, against an explicitly supplied segment.
IgnoranceReport verify_ignorance(const DelayFunctional& eta, const HistorySegment& h,
                                 const SegmentReport& segment, std::size_t trials, std::uint64_t seed,
                                 const DelayEvalOptions& opt = {});

/// Random perturbation of h that agrees with h on [-theta_upper, -theta_lower]
/// (the bracketing knots are kept, so interpolation on the segment is
/// unchanged bit for bit) and differs by at most `amplitude` elsewhere.
HistorySegment perturb_outside(const HistorySegment& h, const SegmentReport& segment, double amplitude,
                               std::uint64_t seed);

struct LipschitzEstimate {
  double estimate = 0.0;
  std::size_t samples = 0;
  /// Estimates at radius, radius/10, radius/100.
  std::vector<double> by_radius;
  bool locally_lipschitz = true;
};

/// Lower estimate of the local Lipschitz constant of eta on the sup-norm ball
/// of the given radius around `center`.
LipschitzEstimate estimate_local_lipschitz(const DelayFunctional& eta, const HistorySegment& center,
                                           double radius, std::size_t trials, std::uint64_t seed,
                                           const DelayEvalOptions& opt = {});

}  // namespace sdd
