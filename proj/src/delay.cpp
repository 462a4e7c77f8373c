#include "sdd/delay.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sdd/errors.hpp"

namespace sdd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double clamp_counted(double v, double lo, double hi, Diagnostics* diag) {
  if (v < lo || v > hi) {
    if (diag) ++diag->delay_clamps;
    return std::clamp(v, lo, hi);
  }
  return v;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite intermediate in delay evaluation: ") + what);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Random state with norm at most `scale`.
StateVector random_state(const SpaceMeta& space, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector d(space);
  for (double& x : d.values()) x = u(rng);
  const double n = d.norm();
  if (n > 0.0) d *= scale / n;
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarMap

ScalarMap::ScalarMap(std::variant<Affine, Table, User> k, double lo, double hi, std::optional<double> lipschitz)
    : kind_(std::move(k)), lo_(lo), hi_(hi), lipschitz_(lipschitz) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConstructionError("scalar map range must satisfy lo <= hi");
  }
  if (lipschitz && !(*lipschitz >= 0.0)) throw ConstructionError("declared Lipschitz bound must be nonnegative");
}

ScalarMap ScalarMap::affine(double a, double b, double lo, double hi, std::optional<double> lipschitz) {
  if (!lipschitz) lipschitz = std::abs(a);
  return ScalarMap(Affine{a, b}, lo, hi, lipschitz);
}

ScalarMap ScalarMap::table(std::vector<double> x, std::vector<double> y, bool step, double lo, double hi,
                           std::optional<double> lipschitz) {
  if (x.empty() || x.size() != y.size()) throw ConstructionError("table needs matching nonempty x and y");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ConstructionError("table abscissae must increase (index " + std::to_string(i) + ")");
  }
  const bool increasing = std::is_sorted(y.begin(), y.end());
  const bool decreasing = std::is_sorted(y.rbegin(), y.rend());
  if (!increasing && !decreasing) throw ConstructionError("table values must be monotone");
  return ScalarMap(Table{std::move(x), std::move(y), step}, lo, hi, lipschitz);
}

ScalarMap ScalarMap::user(std::function<double(const StateVector&)> fn, double lo, double hi,
                          std::optional<double> lipschitz) {
  if (!fn) throw ConstructionError("user scalar map needs a callable");
  return ScalarMap(User{std::move(fn)}, lo, hi, lipschitz);
}

double ScalarMap::operator()(const StateVector& w, Diagnostics* diag) const {
  const double raw = std::visit(overloaded{
                                    [&](const Affine& m) { return m.a * w.mean() + m.b; },
                                    [&](const Table& t) {
                                      const double m = w.mean();
                                      if (m <= t.x.front()) return t.y.front();
                                      if (m >= t.x.back()) return t.y.back();
                                      const auto it = std::upper_bound(t.x.begin(), t.x.end(), m);
                                      const auto i = static_cast<std::size_t>(it - t.x.begin());
                                      if (t.step) return t.y[i - 1];
                                      const double s = (m - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
                                      return (1.0 - s) * t.y[i - 1] + s * t.y[i];
                                    },
                                    [&](const User& u) { return u.fn(w); },
                                },
                                kind_);
  require_finite(raw, "scalar map output");
  return clamp_counted(raw, lo_, hi_, diag);
}

// ---------------------------------------------------------------------------
// DelayFunctional

namespace {

void check_map_range(const ScalarMap& m, double r, const char* name) {
  if (m.lo() < 0.0 || m.hi() > r) {
    throw ConstructionError(std::string(name) + " range must lie in [0, r]");
  }
}

void check_anchor(double a, double r) {
  if (!(a > 0.0 && a <= r)) throw ConstructionError("anchor must lie in (0, r]");
}

void check_nested(const DelayFunctional::NestedPoint& n, double r) {
  check_map_range(n.p, r, "p");
  check_map_range(n.chi, r, "chi");
  check_anchor(n.anchor, r);
}

void check_limits(const DelayFunctional::IntegralLimits& l, double r) {
  check_map_range(l.chi1, r, "chi1");
  check_map_range(l.chi2, r, "chi2");
  check_anchor(l.anchor1, r);
  check_anchor(l.anchor2, r);
}

double eval_nested(const DelayFunctional::NestedPoint& n, const History& h, Diagnostics* diag) {
  const double c = n.chi(h.at(-n.anchor), diag);
  return n.p(h.at(-c), diag);
}

/// Composite trapezoid over [lo, hi] with nodes at the history knots inside,
/// each cell subdivided to width <= dx.
template <class F, class Acc>
void trapezoid(const History& h, double lo, double hi, double dx, F&& integrand, Acc& acc) {
  std::vector<double> nodes;
  nodes.push_back(lo);
  const auto inner = h.knots_between(lo, hi);
  nodes.insert(nodes.end(), inner.begin(), inner.end());
  nodes.push_back(hi);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double a = nodes[i - 1];
    const double b = nodes[i];
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / dx)));
    const double w = (b - a) / static_cast<double>(m);
    for (std::size_t j = 0; j <= m; ++j) {
      const double theta = j == m ? b : a + w * static_cast<double>(j);
      const double weight = (j == 0 || j == m) ? 0.5 * w : w;
      integrand(theta, weight, acc);
    }
  }
}

struct Limits {
  double lo;
  double hi;
  double sign;
};

Limits integral_limits(const DelayFunctional::IntegralLimits& l, const History& h, Diagnostics* diag) {
  const double upper = -l.chi1(h.at(-l.anchor1), diag);
  const double lower = -l.chi2(h.at(-l.anchor2), diag);
  if (lower <= upper) return {lower, upper, 1.0};
  return {upper, lower, -1.0};
}

}  // namespace

DelayFunctional::DelayFunctional(Variant v, double max_delay) : v_(std::move(v)), r_(max_delay) {
  if (!(r_ > 0.0) || !std::isfinite(r_)) throw ConstructionError("max delay r must be positive");
  std::visit(overloaded{
                 [&](const Constant& c) {
                   if (!(c.value >= 0.0 && c.value <= r_)) throw ConstructionError("constant delay must lie in [0, r]");
                 },
                 [&](const NestedPoint& n) { check_nested(n, r_); },
                 [&](const SumOfNested& s) {
                   if (s.terms.empty()) throw ConstructionError("sum of nested terms needs at least one term");
                   for (const auto& t : s.terms) check_nested(t, r_);
                 },
                 [&](const IntegralOuter& i) {
                   check_limits(i.limits, r_);
                   if (!i.weight) throw ConstructionError("integral weight must be set");
                 },
                 [&](const IntegralInner& i) {
                   check_map_range(i.p, r_, "p");
                   check_limits(i.limits, r_);
                   if (!i.weight) throw ConstructionError("integral weight must be set");
                 },
                 [&](const UserOpaque& u) {
                   if (!u.fn) throw ConstructionError("opaque delay needs a callable");
                 },
             },
             v_);
}

std::string DelayFunctional::variant_name() const {
  static constexpr const char* names[] = {"constant",       "nested_point",   "sum_of_nested",
                                          "integral_outer", "integral_inner", "opaque"};
  return names[v_.index()];
}

double DelayFunctional::evaluate(const History& h, const DelayEvalOptions& opt) const {
  if (h.horizon() != r_) throw DomainError("history horizon differs from the functional's max delay");
  Diagnostics* diag = opt.diag;
  const double raw = std::visit(
      overloaded{
          [&](const Constant& c) { return c.value; },
          [&](const NestedPoint& n) { return eval_nested(n, h, diag); },
          [&](const SumOfNested& s) {
            double sum = 0.0;
            for (const auto& t : s.terms) sum += eval_nested(t, h, diag);
            return sum;
          },
          [&](const IntegralOuter& i) {
            const auto lim = integral_limits(i.limits, h, diag);
            double acc = 0.0;
            trapezoid(h, lim.lo, lim.hi, opt.integral_dx,
                      [&](double theta, double w, double& a) { a += w * i.p(h.at(theta), diag) * i.weight(theta); },
                      acc);
            return lim.sign * acc;
          },
          [&](const IntegralInner& i) {
            const auto lim = integral_limits(i.limits, h, diag);
            StateVector acc(h.space());
            trapezoid(
                h, lim.lo, lim.hi, opt.integral_dx,
                [&](double theta, double w, StateVector& a) {
                  const double gw = w * i.weight(theta);
                  const StateVector v = h.at(theta);
                  for (std::size_t k = 0; k < a.size(); ++k) a[k] += gw * v[k];
                },
                acc);
            acc *= lim.sign;
            return i.p(acc, diag);
          },
          [&](const UserOpaque& u) { return u.fn(h); },
      },
      v_);
  require_finite(raw, "delay value");
  return clamp_counted(raw, 0.0, r_, diag);
}

SegmentReport DelayFunctional::dependency_segment(const History& h) const {
  auto from_points = [](const std::vector<double>& pts) {
    SegmentReport s;
    s.theta_upper = *std::max_element(pts.begin(), pts.end());
    s.theta_lower = *std::min_element(pts.begin(), pts.end());
    for (double p : pts) s.anchors_used.push_back(-p);
    return s;
  };
  auto limit_points = [&](const IntegralLimits& l) {
    return std::vector<double>{l.anchor1, l.anchor2, l.chi1(h.at(-l.anchor1)), l.chi2(h.at(-l.anchor2))};
  };
  return std::visit(overloaded{
                        [](const Constant&) { return SegmentReport{}; },
                        [&](const NestedPoint& n) {
                          return from_points({n.anchor, n.chi(h.at(-n.anchor))});
                        },
                        [&](const SumOfNested& s) {
                          std::vector<double> pts;
                          for (const auto& t : s.terms) {
                            pts.push_back(t.anchor);
                            pts.push_back(t.chi(h.at(-t.anchor)));
                          }
                          return from_points(pts);
                        },
                        [&](const IntegralOuter& i) { return from_points(limit_points(i.limits)); },
                        [&](const IntegralInner& i) { return from_points(limit_points(i.limits)); },
                        [&](const UserOpaque& u) {
                          if (!u.segment) {
                            throw EvaluationError(
                                "segment unknown for opaque delay functional; use verify_ignorance with an "
                                "explicit segment");
                          }
                          SegmentReport s = u.segment(h);
                          if (!(0.0 <= s.theta_lower && s.theta_lower <= s.theta_upper && s.theta_upper <= r_)) {
                            throw EvaluationError("declared segment violates 0 <= lower <= upper <= r");
                          }
                          return s;
                        },
                    },
                    v_);
}

// ---------------------------------------------------------------------------
// Fuzzers

HistorySegment perturb_outside(const HistorySegment& h, const SegmentReport& segment, double amplitude,
                               std::uint64_t seed) {
  auto rng = make_rng(seed, 0x5eed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = -segment.theta_upper;
  const double b = -segment.theta_lower;
  const auto times = h.times();
  const auto values = h.values();
  const std::size_t last = times.size() - 1;

  // Knots bracketing the segment stay untouched.
  std::size_t i_lo = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), a) - times.begin());
  i_lo = i_lo == 0 ? 0 : i_lo - 1;
  std::size_t i_hi = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), b) - times.begin());
  i_hi = std::min(i_hi, last);

  const double scale = amplitude * (0.1 + 0.9 * unit(rng));
  std::vector<double> t;
  std::vector<StateVector> v;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool free_knot = i < i_lo || i > i_hi;
    StateVector val = values[i];
    if (free_knot) val += random_state(h.space(), scale * unit(rng), rng);
    t.push_back(times[i]);
    v.push_back(std::move(val));
    const bool free_cell = i < last && (i + 1 <= i_lo || i >= i_hi);
    if (free_cell && unit(rng) < 0.5) {
      const double s = 0.05 + 0.9 * unit(rng);
      const double tn = times[i] + s * (times[i + 1] - times[i]);
      if (tn > times[i] && tn < times[i + 1]) {
        t.push_back(tn);
        v.push_back(lerp(values[i], values[i + 1], s) + random_state(h.space(), scale * unit(rng), rng));
      }
    }
  }
  return HistorySegment(std::move(t), std::move(v), h.horizon());
}

namespace {

HistorySegment with_knots(const HistorySegment& h, std::initializer_list<double> extra) {
  const auto times = h.times();
  const auto values = h.values();
  std::vector<double> t(times.begin(), times.end());
  std::vector<StateVector> v(values.begin(), values.end());
  for (double x : extra) {
    const auto it = std::lower_bound(t.begin(), t.end(), x);
    if (it == t.begin() || it == t.end() || *it == x) continue;
    const auto i = static_cast<std::size_t>(it - t.begin());
    v.insert(v.begin() + static_cast<std::ptrdiff_t>(i), h.at(x));
    t.insert(it, x);
  }
  return HistorySegment(std::move(t), std::move(v), h.horizon());
}

}  // namespace

IgnoranceReport verify_ignorance(const DelayFunctional& eta, const HistorySegment& h, std::size_t trials,
                                 std::uint64_t seed, const DelayEvalOptions& opt) {
  return verify_ignorance(eta, h, eta.dependency_segment(h), trials, seed, opt);
}

IgnoranceReport verify_ignorance(const DelayFunctional& eta, const HistorySegment& h,
                                 const SegmentReport& segment, std::size_t trials, std::uint64_t seed,
                                 const DelayEvalOptions& opt) {
  constexpr double opaque_tol = 1e-12;
  IgnoranceReport rep;
  rep.segment = segment;
  rep.trials = trials;
  // Segment ends become knots, so everything outside the segment can move.
  const HistorySegment fine = with_knots(h, {-segment.theta_upper, -segment.theta_lower});
  const double base = eta.evaluate(fine, opt);
  if (segment.theta_upper >= h.horizon() && segment.theta_lower <= 0.0) {
    rep.note = "segment covers the whole horizon; nothing to perturb";
  }
  for (std::size_t k = 0; k < trials; ++k) {
    HistorySegment psi = perturb_outside(fine, segment, 1.0, seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
    const double val = eta.evaluate(psi, opt);
    const double dev = std::abs(val - base);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    const bool ok = eta.is_structured() ? val == base : dev <= opaque_tol;
    if (!ok && rep.passes) {
      rep.passes = false;
      rep.counterexample = std::move(psi);
    }
  }
  return rep;
}

LipschitzEstimate estimate_local_lipschitz(const DelayFunctional& eta, const HistorySegment& center,
                                           double radius, std::size_t trials, std::uint64_t seed,
                                           const DelayEvalOptions& opt) {
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  LipschitzEstimate est;
  const auto times = center.times();
  const auto values = center.values();
  auto perturbed = [&](double rad, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<StateVector> v(values.begin(), values.end());
    for (auto& x : v) x += random_state(center.space(), rad * unit(rng), rng);
    return HistorySegment(std::vector<double>(times.begin(), times.end()), std::move(v), center.horizon());
  };
  std::size_t stream = 0;
  for (double rad : {radius, radius / 10.0, radius / 100.0}) {
    double best = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      auto rng = make_rng(seed, ++stream);
      std::bernoulli_distribution at_center(0.5);
      const HistorySegment phi = at_center(rng) ? center : perturbed(rad, rng);
      const HistorySegment psi = perturbed(rad, rng);
      double dist = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        dist = std::max(dist, (phi.values()[i] - psi.values()[i]).norm());
      }
      if (dist == 0.0) continue;
      const double q = std::abs(eta.evaluate(phi, opt) - eta.evaluate(psi, opt)) / dist;
      best = std::max(best, q);
      ++est.samples;
    }
    est.by_radius.push_back(best);
    est.estimate = std::max(est.estimate, best);
  }
  // A Lipschitz functional has bounded quotients as the ball shrinks; a jump
  // makes them grow like 1/radius.
  est.locally_lipschitz = !(est.by_radius[2] > 5.0 * est.by_radius[0] + 1e-12);
  return est;
}

}  // namespace sdd
