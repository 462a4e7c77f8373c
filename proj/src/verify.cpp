#include "sdd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sdd/errors.hpp"

namespace sdd {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// phi + knotwise random offsets of norm in [size/2, size].
HistorySegment perturb_everywhere(const HistorySegment& phi, double size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::vector<StateVector> v(phi.values().begin(), phi.values().end());
  for (auto& x : v) {
    StateVector d(x.space());
    for (double& c : d.values()) c = u(rng);
    const double n = d.norm();
    if (n > 0.0) d *= size * mag(rng) / n;
    x += d;
  }
  return HistorySegment(std::vector<double>(phi.times().begin(), phi.times().end()), std::move(v), phi.horizon());
}

void extend_range(const StateVector& v, double& lo, double& hi) {
  for (double x : v.values()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

/// First solved time at which the window leaves the closed alpha-ball around phi.
double exit_time(const Trajectory& tr, const HistorySegment& phi, double alpha, double t_max) {
  for (double s : tr.times()) {
    if (s <= 0.0) continue;
    if (s > t_max) break;
    if (sup_distance(tr.window(s), phi) > alpha) return s;
  }
  return kInf;
}

}  // namespace

WellPosednessConstants measure_constants(const ProblemSpec& problem, const HistorySegment& phi,
                                         const ConstantsRequest& req, double range_lo, double range_hi,
                                         double integral_dx) {
  if (!(req.q > 0.0 && req.q < 1.0)) throw DomainError("q must lie in (0, 1)");
  if (!(req.omega > 0.0)) throw DomainError("omega must be positive");
  WellPosednessConstants c;
  c.omega = req.omega;
  c.q = req.q;
  c.lipschitz_b = req.lipschitz_b.value_or(problem.nonlinearity.lipschitz_bound(range_lo, range_hi));
  c.lipschitz_phi = req.lipschitz_phi.value_or(phi.lipschitz_quotient());
  if (req.lipschitz_eta) {
    c.lipschitz_eta = *req.lipschitz_eta;
  } else {
    c.lipschitz_eta = estimate_local_lipschitz(problem.delay, phi, req.omega, req.lipschitz_trials, req.seed,
                                               {integral_dx, nullptr})
                          .estimate;
  }
  const double eta_phi = problem.delay.evaluate(phi, {integral_dx, nullptr});
  c.alpha = std::min({req.omega, 1.0, c.lipschitz_eta > 0.0 ? 0.25 * eta_phi / c.lipschitz_eta : kInf});
  return c;
}

// ---------------------------------------------------------------------------

UniquenessReport uniqueness_probe(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                                  const SolverConfig& cfg, std::size_t n_variants, std::uint64_t seed,
                                  std::size_t ignorance_trials) {
  UniquenessReport rep;
  rep.threshold = 10.0 * cfg.picard_tol;
  rep.variants = n_variants;
  const DelayFunctional& eta = problem->delay;
  if (eta.is_structured()) {
    rep.precondition = "ignorance holds by construction (" + eta.variant_name() + ")";
  } else {
    try {
      const auto ign = verify_ignorance(eta, phi, ignorance_trials, seed, {cfg.integral_dx, nullptr});
      if (!ign.passes) {
        rep.status = "precondition unverified";
        rep.precondition = "ignorance fuzzing found a counterexample";
        return rep;
      }
      rep.precondition = "ignorance fuzzing passed";
    } catch (const EvaluationError& e) {
      rep.status = "precondition unverified";
      rep.precondition = e.what();
      return rep;
    }
  }

  std::vector<Trajectory> runs;
  runs.push_back(solve(problem, phi, cfg));
  for (std::size_t i = 0; i < n_variants; ++i) {
    SolveOptions opt;
    opt.picard_seed = seed + 0x1000 + i;
    runs.push_back(solve(problem, phi, cfg, opt));
  }
  for (const auto& st : runs.front().steps()) {
    if (st.picard_iterations > 0) ++rep.picard_steps;
  }
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      const auto va = runs[a].values();
      const auto vb = runs[b].values();
      for (std::size_t i = 0; i < va.size(); ++i) {
        rep.max_divergence = std::max(rep.max_divergence, (va[i] - vb[i]).norm());
      }
    }
  }
  rep.certified = rep.max_divergence <= rep.threshold;
  rep.status = rep.certified ? "certified" : "diverged";
  return rep;
}

// ---------------------------------------------------------------------------

DependenceReport continuous_dependence_probe(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                                             const SolverConfig& cfg, const ConstantsRequest& req,
                                             std::size_t n_perturbations, double epsilon, std::uint64_t seed) {
  const ProblemSpec& p = *problem;
  const DelayEvalOptions eval_opt{cfg.integral_dx, nullptr};
  DependenceReport rep;
  rep.perturbations = n_perturbations;
  rep.eta_phi = p.delay.evaluate(phi, eval_opt);
  if (!(rep.eta_phi > 0.0)) throw DomainError("eta(phi) must be positive for the dependence estimate");

  std::vector<HistorySegment> initial;
  initial.reserve(n_perturbations);
  for (std::size_t k = 0; k < n_perturbations; ++k) {
    auto rng = make_rng(seed, k + 1);
    initial.push_back(epsilon > 0.0 ? perturb_everywhere(phi, epsilon, rng) : phi);
  }

  double lo = kInf;
  double hi = -kInf;
  for (const auto& v : phi.values()) extend_range(v, lo, hi);
  for (const auto& h : initial) {
    for (const auto& v : h.values()) extend_range(v, lo, hi);
  }
  const double margin = 0.1 * (hi - lo) + 1e-3;
  lo -= margin;
  hi += margin;

  ConstantsRequest creq = req;
  creq.seed = req.seed ? req.seed : seed;
  rep.constants = measure_constants(p, phi, creq, lo, hi, cfg.integral_dx);
  auto& c = rep.constants;
  if (phi.lipschitz_quotient() > c.lipschitz_phi * (1.0 + 1e-9) + 1e-12) {
    throw DomainError("phi is not in the class of L-Lipschitz segments for the given L");
  }

  auto cap_for = [&](double lb) {
    const double growth = lb * (1.0 + c.lipschitz_phi * c.lipschitz_eta);
    return std::min(0.75 * rep.eta_phi, growth > 0.0 ? c.q / growth : kInf);
  };
  rep.t_cap = cap_for(c.lipschitz_b);

  SolverConfig run = cfg;
  run.T = rep.t_cap;
  if (!(rep.t_cap > cfg.dt)) throw DomainError("horizon below resolution; decrease dt or q");
  const Trajectory ref = solve(problem, phi, run);
  std::vector<Trajectory> pert;
  pert.reserve(initial.size());
  for (const auto& h : initial) pert.push_back(solve(problem, h, run));

  // L_B must hold on every value the runs actually visited; widening only shrinks t_cap.
  if (!req.lipschitz_b) {
    double vlo = lo;
    double vhi = hi;
    for (const auto& v : ref.values()) extend_range(v, vlo, vhi);
    for (const auto& tr : pert) {
      for (const auto& v : tr.values()) extend_range(v, vlo, vhi);
    }
    if (vlo < lo || vhi > hi) {
      c.lipschitz_b = p.nonlinearity.lipschitz_bound(vlo, vhi);
      rep.t_cap = cap_for(c.lipschitz_b);
    }
  }

  rep.t_exit = exit_time(ref, phi, c.alpha, rep.t_cap);
  c.t1 = std::min(rep.t_cap, rep.t_exit);
  if (!(c.t1 > cfg.dt)) throw DomainError("horizon below resolution; decrease dt or q");
  const double growth = c.lipschitz_b * (1.0 + c.lipschitz_phi * c.lipschitz_eta);

  double worst_factor = 1.0;
  for (std::size_t k = 0; k < pert.size(); ++k) {
    const double t1 = std::min(c.t1, exit_time(pert[k], phi, c.alpha, c.t1));
    const double factor = 1.0 / (1.0 - growth * t1);
    worst_factor = std::max(worst_factor, factor);
    const double d0 = sup_distance(initial[k], phi);
    double measured = d0;
    const auto times = ref.times();
    for (std::size_t i = 0; i < times.size() && times[i] <= t1; ++i) {
      measured = std::max(measured, (pert[k].values()[i] - ref.values()[i]).norm());
    }
    measured = std::max(measured, (pert[k].value_at(t1) - ref.value_at(t1)).norm());
    if (d0 == 0.0) {
      // Identical data: the bound reads 0 <= 0.
      if (measured == 0.0) ++rep.within;
      else rep.passes = false;
      continue;
    }
    const double amplification = measured / d0;
    const double ratio = amplification / factor;
    rep.worst_amplification = std::max(rep.worst_amplification, amplification);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio <= 1.0 + rep.bound_slack) {
      ++rep.within;
    } else {
      rep.passes = false;
    }
  }
  rep.bound_factor = worst_factor;
  return rep;
}

// ---------------------------------------------------------------------------

AttractorDiagnostics dissipation_probe(std::shared_ptr<const ProblemSpec> problem, const SolverConfig& cfg,
                                       const std::vector<HistorySegment>& ensemble, double t_long,
                                       std::size_t windows_per_member) {
  const ProblemSpec& p = *problem;
  if (!p.nonlinearity.bounded()) throw DomainError("dissipation probe needs a bounded nonlinearity");
  if (ensemble.empty()) throw DomainError("empty ensemble");
  AttractorDiagnostics d;
  d.t_long = t_long;
  const SpaceMeta& sp = p.space();
  const double spatial = sp.is_pde() ? std::sqrt(sp.length * static_cast<double>(sp.size) / (sp.size + 1.0))
                                     : std::sqrt(static_cast<double>(sp.size));
  const double kernel_mass = p.nonlinearity.is_local() ? 1.0 : p.nonlinearity.kernel_bound() * sp.length;
  d.a_priori_radius = p.nonlinearity.pointwise().sup_abs() * kernel_mass * spatial / p.op.min_eigenvalue();

  SolverConfig run = cfg;
  run.T = t_long;
  const double tail_start = 0.8 * t_long;
  const double r = p.horizon();
  for (const auto& phi : ensemble) {
    std::optional<Trajectory> tr;
    try {
      tr.emplace(solve(problem, phi, run));
    } catch (const SolverError& e) {
      d.dissipative = false;
      d.note = std::string("dissipation not observed: ") + e.what();
      continue;
    }
    if (tr->max_norm() > 1e6) {
      d.dissipative = false;
      d.note = "dissipation not observed: norm exceeded 1e6";
      continue;
    }
    TailSample tail;
    const auto times = tr->times();
    const auto values = tr->values();
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < tail_start - r) continue;
      d.radius = std::max(d.radius, values[i].norm());
      tail.times.push_back(times[i]);
      tail.values.push_back(values[i]);
    }
    d.tails.push_back(std::move(tail));
    for (std::size_t w = 0; w < windows_per_member; ++w) {
      const double t = tail_start + (t_long - tail_start) * (static_cast<double>(w) + 1.0) / windows_per_member;
      d.windows.push_back(tr->window(std::min(t, tr->end_time())));
    }
  }
  return d;
}

HolderReport holder_regularity_probe(const AttractorDiagnostics& diag, std::size_t pairs, std::uint64_t seed) {
  HolderReport rep;
  for (const auto& w : diag.windows) rep.lipschitz_constant = std::max(rep.lipschitz_constant, w.lipschitz_quotient());

  std::vector<const TailSample*> usable;
  for (const auto& t : diag.tails) {
    if (t.times.size() >= 2) usable.push_back(&t);
  }
  if (usable.empty()) throw EvaluationError("no tail samples to estimate Hoelder quotients");

  double scale = 0.0;
  for (const auto* t : usable) {
    for (const auto& v : t->values) scale = std::max(scale, v.norm());
  }
  const double floor = 1e-13 * (1.0 + scale);

  auto rng = make_rng(seed, 0x401de4);
  std::vector<double> log_dt;
  std::vector<double> log_du;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto& tail = *usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
    const auto& t = tail.times;
    const double min_gap = t[1] - t[0];
    const double max_gap = std::min(1.0, t.back() - t.front()) * (1.0 - 1e-9);
    if (!(max_gap > min_gap)) continue;
    const double gap =
        std::exp(std::uniform_real_distribution<double>(std::log(min_gap), std::log(max_gap))(rng));
    const double start = std::uniform_real_distribution<double>(t.front(), t.back() - gap)(rng);
    const auto i = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), start) - t.begin());
    auto j = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t[i] + gap) - t.begin());
    if (j >= t.size()) j = t.size() - 1;
    if (j == i || t[j] - t[i] >= 1.0) continue;
    const double dt = t[j] - t[i];
    const double du = (tail.values[j] - tail.values[i]).norm();
    ++rep.pairs;
    rep.holder_half_constant = std::max(rep.holder_half_constant, du / std::sqrt(dt));
    if (du > floor) {
      log_dt.push_back(std::log(dt));
      log_du.push_back(std::log(du));
    }
  }
  if (rep.pairs < 10) throw EvaluationError("fewer than 10 valid time pairs on the tails");
  if (log_dt.size() >= 2) {
    const double mx = std::accumulate(log_dt.begin(), log_dt.end(), 0.0) / log_dt.size();
    const double my = std::accumulate(log_du.begin(), log_du.end(), 0.0) / log_du.size();
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < log_dt.size(); ++i) {
      sxx += (log_dt[i] - mx) * (log_dt[i] - mx);
      sxy += (log_dt[i] - mx) * (log_du[i] - my);
    }
    if (sxx > 0.0) rep.exponent_fit = sxy / sxx;
  }
  return rep;
}

// ---------------------------------------------------------------------------

json to_json(const SegmentReport& s) {
  return {{"theta_upper", s.theta_upper},
          {"theta_lower", s.theta_lower},
          {"interval", {-s.theta_upper, -s.theta_lower}},
          {"anchors_used", s.anchors_used}};
}

json to_json(const HistorySegment& h) {
  json values = json::array();
  for (const auto& v : h.values()) values.push_back(std::vector<double>(v.values().begin(), v.values().end()));
  return {{"horizon", h.horizon()},
          {"times", std::vector<double>(h.times().begin(), h.times().end())},
          {"values", std::move(values)}};
}

json to_json(const IgnoranceReport& r) {
  json j = {{"pass", r.passes},
            {"trials", r.trials},
            {"max_deviation", r.max_deviation},
            {"segment", to_json(r.segment)}};
  if (!r.note.empty()) j["note"] = r.note;
  j["counterexample"] = r.counterexample ? to_json(*r.counterexample) : json(nullptr);
  return j;
}

json to_json(const UniquenessReport& r) {
  return {{"pass", r.certified},
          {"status", r.status},
          {"constants", {{"threshold", r.threshold}, {"variants", r.variants}}},
          {"measurements", {{"max_divergence", r.max_divergence}, {"picard_steps", r.picard_steps}}},
          {"precondition", r.precondition}};
}

json to_json(const DependenceReport& r) {
  const auto& c = r.constants;
  return {{"pass", r.passes},
          {"constants",
           {{"L_B", c.lipschitz_b},
            {"L", c.lipschitz_phi},
            {"L_eta", c.lipschitz_eta},
            {"omega", c.omega},
            {"q", c.q},
            {"alpha", c.alpha},
            {"t1", c.t1},
            {"bound_slack", r.bound_slack}}},
          {"measurements",
           {{"eta_phi", r.eta_phi},
            {"t_cap", r.t_cap},
            {"t_exit", std::isfinite(r.t_exit) ? json(r.t_exit) : json(nullptr)},
            {"bound_factor", r.bound_factor},
            {"worst_ratio", r.worst_ratio},
            {"worst_amplification", r.worst_amplification},
            {"within", r.within},
            {"perturbations", r.perturbations}}}};
}

json to_json(const AttractorDiagnostics& d) {
  json j = {{"pass", d.dissipative},
            {"constants", {{"t_long", d.t_long}, {"a_priori_radius", d.a_priori_radius}}},
            {"measurements",
             {{"radius", d.radius}, {"members", d.tails.size()}, {"windows", d.windows.size()}}}};
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

json to_json(const HolderReport& h) {
  return {{"L0", h.holder_half_constant},
          {"L_tilde", h.lipschitz_constant},
          {"exponent_fit", h.exponent_fit ? json(*h.exponent_fit) : json(nullptr)},
          {"pairs", h.pairs}};
}

json hadamard_report(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                     const SolverConfig& cfg, const HadamardOptions& opt, std::uint64_t seed) {
  const ProblemSpec& p = *problem;
  json sections = json::object();
  bool certified = true;
  auto guarded = [&](const char* name, auto&& body) {
    try {
      json s = body();
      if (!s.value("pass", false)) certified = false;
      sections[name] = std::move(s);
    } catch (const std::exception& e) {
      certified = false;
      sections[name] = {{"pass", false}, {"error", e.what()}};
    }
  };

  json regime = json::object();
  guarded("ignorance", [&] {
    const IgnoranceReport ign = verify_ignorance(p.delay, phi, opt.ignorance_trials, seed, {cfg.integral_dx, nullptr});
    const double lower = ign.segment.theta_lower;
    regime["theta_lower"] = lower;
    if (lower > 0.0) {
      regime["eta_ign"] = 0.5 * lower;
      regime["note"] = "state-independent (H) holds locally, eta_ign = 0.5*theta_lower(phi)";
    } else {
      regime["note"] = "phi lies in Z (theta_lower = 0); dependence relies on eta(phi) > 0 and a local L_eta";
    }
    return to_json(ign);
  });

  guarded("solve", [&] {
    const Trajectory tr = solve(problem, phi, cfg);
    std::size_t picard = 0;
    for (const auto& st : tr.steps()) picard += st.picard_iterations > 0 ? 1 : 0;
    return json{{"pass", true},
                {"constants", {{"dt", cfg.dt}, {"T", cfg.T}, {"picard_tol", cfg.picard_tol}}},
                {"measurements",
                 {{"steps", tr.steps().size()},
                  {"picard_steps", picard},
                  {"max_norm", tr.max_norm()},
                  {"delay_clamps", tr.diagnostics().delay_clamps}}}};
  });

  guarded("uniqueness", [&] {
    return to_json(uniqueness_probe(problem, phi, cfg, opt.n_variants, seed, opt.ignorance_trials));
  });

  guarded("dependence", [&] {
    return to_json(continuous_dependence_probe(problem, phi, cfg, opt.constants, opt.n_perturbations, opt.epsilon,
                                               seed));
  });

  return {{"schema_version", 1},
          {"sections", std::move(sections)},
          {"regime", std::move(regime)},
          {"well_posedness", certified ? "certified" : "not certified"}};
}

}  // namespace sdd
