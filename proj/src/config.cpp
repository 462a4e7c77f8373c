#include "sdd/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "sdd/errors.hpp"

namespace sdd {

using nlohmann::json;

namespace {

/// Lookup with a path prefix for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) fail("unknown key '" + k + "'");
    }
  }

  bool has(const char* k) const { return j_.contains(k); }
  Node child(const char* k) const {
    if (!has(k)) fail(std::string("missing '") + k + "'");
    return Node(j_.at(k), path_ + "." + k);
  }
  const json& raw(const char* k) const {
    if (!has(k)) fail(std::string("missing '") + k + "'");
    return j_.at(k);
  }
  std::string path(const char* k) const { return path_ + "." + k; }

  double number(const char* k) const { return to_number(raw(k), path(k)); }
  double number(const char* k, double fallback) const { return has(k) ? number(k) : fallback; }
  std::optional<double> maybe_number(const char* k) const {
    if (!has(k)) return std::nullopt;
    return number(k);
  }
  std::size_t count(const char* k, std::size_t fallback) const {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(std::string("'") + k + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }
  std::string text(const char* k) const {
    const json& v = raw(k);
    if (!v.is_string()) fail(std::string("'") + k + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const char* k, const std::string& fallback) const { return has(k) ? text(k) : fallback; }
  bool flag(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_boolean()) fail(std::string("'") + k + "' must be a boolean");
    return v.get<bool>();
  }
  std::vector<double> numbers(const char* k) const {
    const json& v = raw(k);
    if (!v.is_array()) fail(std::string("'") + k + "' must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_number(v[i], fmt::format("{}[{}]", path(k), i)));
    return out;
  }

  /// A number, or one of the strings "pi", "e".
  static double to_number(const json& v, const std::string& where) {
    if (v.is_number()) {
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw ConfigError(where + ": non-finite number");
      return x;
    }
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "pi") return std::numbers::pi;
      if (s == "e") return std::numbers::e;
    }
    throw ConfigError(where + ": expected a number");
  }

 private:
  const json& j_;
  std::string path_;
};

std::pair<double, double> range_of(const Node& n) {
  const auto r = n.numbers("range");
  if (r.size() != 2 || !(r[0] <= r[1])) n.fail("'range' must be [lo, hi] with lo <= hi");
  return {r[0], r[1]};
}

ScalarMap parse_map(const Node& n) {
  const auto kind = n.text("kind");
  if (kind == "constant") {
    n.allow({"kind", "value"});
    return ScalarMap::constant(n.number("value"));
  }
  if (kind == "affine") {
    n.allow({"kind", "a", "b", "range", "lipschitz"});
    const auto [lo, hi] = range_of(n);
    return ScalarMap::affine(n.number("a"), n.number("b"), lo, hi, n.maybe_number("lipschitz"));
  }
  if (kind == "table") {
    n.allow({"kind", "x", "y", "step", "range", "lipschitz"});
    const auto [lo, hi] = range_of(n);
    return ScalarMap::table(n.numbers("x"), n.numbers("y"), n.flag("step", false), lo, hi, n.maybe_number("lipschitz"));
  }
  n.fail("unknown map kind '" + kind + "'");
}

std::function<double(double)> parse_weight(const Node& parent) {
  if (!parent.has("weight")) return [](double) { return 1.0; };
  const Node n = parent.child("weight");
  const auto kind = n.text("kind");
  if (kind == "constant") {
    n.allow({"kind", "value"});
    const double c = n.number("value");
    return [c](double) { return c; };
  }
  if (kind == "exponential") {
    n.allow({"kind", "rate"});
    const double k = n.number("rate");
    return [k](double theta) { return std::exp(k * theta); };
  }
  n.fail("unknown weight kind '" + kind + "'");
}

DelayFunctional::NestedPoint parse_nested(const Node& n) {
  n.allow({"p", "chi", "anchor"});
  return {parse_map(n.child("p")), parse_map(n.child("chi")), n.number("anchor")};
}

DelayFunctional::IntegralLimits parse_limits(const Node& n) {
  n.allow({"chi1", "chi2", "anchor1", "anchor2"});
  return {parse_map(n.child("chi1")), parse_map(n.child("chi2")), n.number("anchor1"), n.number("anchor2")};
}

DelayFunctional parse_delay(const Node& n, double r);

/// Opaque delays: either a plain read-out at fixed lags, or a wrapped structured delay.
DelayFunctional parse_opaque(const Node& n, double r) {
  n.allow({"variant", "horizon", "reads", "p", "declared_segment", "wrap", "declare_segment"});
  DelayFunctional::UserOpaque op;
  if (n.has("wrap")) {
    if (n.has("reads") || n.has("p")) n.fail("'wrap' excludes 'reads' and 'p'");
    auto inner = std::make_shared<DelayFunctional>(parse_delay(n.child("wrap"), r));
    if (!inner->is_structured()) n.fail("'wrap' must be a structured delay");
    op.fn = [inner](const History& h) { return inner->evaluate(h); };
    if (n.flag("declare_segment", true)) {
      op.segment = [inner](const History& h) { return inner->dependency_segment(h); };
    }
  } else {
    auto lags = n.numbers("reads");
    if (lags.empty()) n.fail("'reads' must not be empty");
    for (double lag : lags) {
      if (!(lag >= 0.0 && lag <= r)) n.fail("'reads' entries must lie in [0, horizon]");
    }
    auto p = std::make_shared<ScalarMap>(parse_map(n.child("p")));
    op.fn = [lags, p](const History& h) {
      StateVector acc = h.at(-lags.front());
      for (std::size_t i = 1; i < lags.size(); ++i) acc += h.at(-lags[i]);
      acc *= 1.0 / static_cast<double>(lags.size());
      return (*p)(acc);
    };
  }
  if (n.has("declared_segment")) {
    const auto s = n.numbers("declared_segment");
    if (s.size() != 2 || !(s[0] >= s[1] && s[1] >= 0.0 && s[0] <= r)) {
      n.fail("'declared_segment' must be [theta_upper, theta_lower] with r >= upper >= lower >= 0");
    }
    const SegmentReport rep{s[0], s[1], {}};
    op.segment = [rep](const History&) { return rep; };
  }
  return DelayFunctional(std::move(op), r);
}

DelayFunctional parse_delay(const Node& n, double r) {
  const auto variant = n.text("variant");
  if (variant == "opaque") return parse_opaque(n, r);
  try {
    if (variant == "constant") {
      n.allow({"variant", "horizon", "value"});
      return DelayFunctional::constant(n.number("value"), r);
    }
    if (variant == "nested_point") {
      n.allow({"variant", "horizon", "p", "chi", "anchor"});
      return DelayFunctional({DelayFunctional::NestedPoint{parse_map(n.child("p")), parse_map(n.child("chi")),
                                                           n.number("anchor")}},
                             r);
    }
    if (variant == "sum_of_nested") {
      n.allow({"variant", "horizon", "terms"});
      const json& terms = n.raw("terms");
      if (!terms.is_array() || terms.empty()) n.fail("'terms' must be a non-empty array");
      DelayFunctional::SumOfNested sum;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        sum.terms.push_back(parse_nested(Node(terms[i], fmt::format("{}[{}]", n.path("terms"), i))));
      }
      return DelayFunctional(std::move(sum), r);
    }
    if (variant == "integral_outer" || variant == "integral_inner") {
      n.allow({"variant", "horizon", "p", "weight", "limits"});
      auto p = parse_map(n.child("p"));
      auto w = parse_weight(n);
      auto lim = parse_limits(n.child("limits"));
      if (variant == "integral_outer") {
        return DelayFunctional(DelayFunctional::IntegralOuter{std::move(p), std::move(w), std::move(lim)}, r);
      }
      return DelayFunctional(DelayFunctional::IntegralInner{std::move(p), std::move(w), std::move(lim)}, r);
    }
  } catch (const ConstructionError& e) {
    n.fail(e.what());
  }
  n.fail("unknown delay variant '" + variant + "'");
}

std::optional<Kernel> parse_kernel(const Node& parent) {
  if (!parent.has("kernel")) return std::nullopt;
  const Node n = parent.child("kernel");
  const auto kind = n.text("kind");
  if (kind == "gaussian") {
    n.allow({"kind", "alpha"});
    const double a = n.number("alpha");
    if (!(a > 0.0)) n.fail("'alpha' must be positive");
    return Kernel::gaussian(a);
  }
  if (kind == "constant") {
    n.allow({"kind", "value"});
    return Kernel::constant(n.number("value"));
  }
  n.fail("unknown kernel kind '" + kind + "'");
}

EvolutionOperator parse_operator(const Node& n) {
  const auto kind = n.text("kind");
  if (kind == "ode") {
    n.allow({"kind", "eigenvalues", "d"});
    auto eig = n.numbers("eigenvalues");
    if (eig.empty()) n.fail("'eigenvalues' must not be empty");
    return EvolutionOperator::ode_diag(std::move(eig), n.number("d", 0.0));
  }
  if (kind == "pde") {
    n.allow({"kind", "n", "length", "nu", "d"});
    const auto modes = n.count("n", 0);
    const double length = n.number("length");
    const double nu = n.number("nu", 1.0);
    if (modes < 1) n.fail("'n' must be at least 1");
    if (!(length > 0.0)) n.fail("'length' must be positive");
    if (!(nu > 0.0)) n.fail("'nu' must be positive");
    return EvolutionOperator::pde_dirichlet(modes, length, nu, n.number("d", 0.0));
  }
  n.fail("unknown operator kind '" + kind + "'");
}

Nonlinearity parse_nonlinearity(const Node& n, const SpaceMeta& space) {
  const auto kind = n.text("kind");
  const auto kernel = parse_kernel(n);
  if (kernel && !space.is_pde()) n.fail("a kernel needs a pde operator");
  try {
    if (kind == "nicholson") {
      n.allow({"kind", "p", "kernel"});
      return Nonlinearity::nicholson(n.number("p"), kernel, space);
    }
    if (kind == "affine") {
      n.allow({"kind", "slope", "intercept", "kernel"});
      auto b = PointwiseMap::affine(n.number("slope"), n.number("intercept", 0.0));
      return kernel ? Nonlinearity::nonlocal(std::move(b), *kernel, space) : Nonlinearity::local(std::move(b), space);
    }
  } catch (const ConstructionError& e) {
    n.fail(e.what());
  }
  n.fail("unknown nonlinearity kind '" + kind + "'");
}

/// Spatial shape of generated initial data.
StateVector profile(const SpaceMeta& space, const std::string& name, double scale, const Node& n) {
  StateVector v(space);
  for (std::size_t j = 0; j < space.size; ++j) {
    double s = 1.0;
    if (space.is_pde() && name == "sine") s = std::sin(std::numbers::pi * space.grid_point(j) / space.length);
    else if (name != "sine" && name != "flat") n.fail("unknown profile '" + name + "'");
    v[j] = scale * s;
  }
  return v;
}

HistorySegment parse_initial(const Node& n, const SpaceMeta& space, double r) {
  const auto gen = n.text("generator");
  if (gen == "knots") {
    n.allow({"generator", "times", "values"});
    auto times = n.numbers("times");
    const json& vals = n.raw("values");
    if (!vals.is_array() || vals.size() != times.size()) n.fail("'values' must match 'times' in length");
    std::vector<StateVector> states;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const auto where = fmt::format("{}[{}]", n.path("values"), i);
      std::vector<double> v;
      if (vals[i].is_array()) {
        for (const auto& x : vals[i]) v.push_back(Node::to_number(x, where));
      } else {
        v.push_back(Node::to_number(vals[i], where));
      }
      if (v.size() != space.size) throw ConfigError(where + ": state size differs from the operator's");
      states.emplace_back(space, std::move(v));
    }
    try {
      return HistorySegment(std::move(times), std::move(states), r);
    } catch (const ConstructionError& e) {
      n.fail(e.what());
    }
  }
  n.allow({"generator", "value", "from", "to", "amplitude", "base", "knots", "profile"});
  const auto intervals = n.count("knots", 100);
  if (intervals < 1) n.fail("'knots' must be at least 1");
  const auto shape = n.text("profile", "sine");
  std::function<double(double)> g;
  if (gen == "constant") {
    const double c = n.number("value");
    g = [c](double) { return c; };
  } else if (gen == "ramp") {
    const double a = n.number("from");
    const double b = n.number("to");
    g = [a, b, r](double th) { return a + (b - a) * (th + r) / r; };
  } else if (gen == "sine_bump") {
    const double amp = n.number("amplitude");
    const double base = n.number("base", 0.0);
    g = [amp, base, r](double th) { return base + amp * std::sin(std::numbers::pi * (th + r) / r); };
  } else {
    n.fail("unknown generator '" + gen + "'");
  }
  const StateVector unit = profile(space, shape, 1.0, n);
  return HistorySegment::sample([&](double th) { return g(th) * unit; }, r, intervals);
}

SolverConfig parse_solver(const Node& n) {
  n.allow({"dt", "T", "picard_tol", "picard_max_iters", "integral_dx", "record_stride"});
  SolverConfig c;
  c.dt = n.number("dt", c.dt);
  c.T = n.number("T", c.T);
  c.picard_tol = n.number("picard_tol", c.picard_tol);
  c.picard_max_iters = static_cast<int>(n.count("picard_max_iters", static_cast<std::size_t>(c.picard_max_iters)));
  c.integral_dx = n.number("integral_dx", c.integral_dx);
  c.record_stride = n.count("record_stride", c.record_stride);
  return c;
}

VerifySettings parse_verify(const Node& n) {
  n.allow({"seed", "omega", "q", "epsilon", "n_perturbations", "n_variants", "ignorance_trials", "lipschitz_trials",
           "t_long", "ensemble_size", "ensemble_radius", "holder_pairs", "lipschitz_b", "lipschitz_eta"});
  VerifySettings v;
  if (n.has("seed")) {
    const json& s = n.raw("seed");
    if (!s.is_number_unsigned()) n.fail("'seed' must be a non-negative integer");
    v.seed = s.get<std::uint64_t>();
  }
  v.omega = n.number("omega", v.omega);
  v.q = n.number("q", v.q);
  v.epsilon = n.number("epsilon", v.epsilon);
  v.n_perturbations = n.count("n_perturbations", v.n_perturbations);
  v.n_variants = n.count("n_variants", v.n_variants);
  v.ignorance_trials = n.count("ignorance_trials", v.ignorance_trials);
  v.lipschitz_trials = n.count("lipschitz_trials", v.lipschitz_trials);
  v.t_long = n.number("t_long", v.t_long);
  v.ensemble_size = n.count("ensemble_size", v.ensemble_size);
  v.ensemble_radius = n.number("ensemble_radius", v.ensemble_radius);
  v.holder_pairs = n.count("holder_pairs", v.holder_pairs);
  v.lipschitz_b = n.maybe_number("lipschitz_b");
  v.lipschitz_eta = n.maybe_number("lipschitz_eta");
  if (!(v.q > 0.0 && v.q < 1.0)) n.fail("'q' must lie in (0, 1)");
  if (!(v.omega > 0.0)) n.fail("'omega' must be positive");
  if (!(v.epsilon >= 0.0)) n.fail("'epsilon' must be non-negative");
  if (!(v.t_long > 0.0)) n.fail("'t_long' must be positive");
  return v;
}

}  // namespace

ConstantsRequest VerifySettings::constants() const {
  ConstantsRequest c;
  c.omega = omega;
  c.q = q;
  c.lipschitz_trials = lipschitz_trials;
  c.seed = seed.value_or(0);
  c.lipschitz_b = lipschitz_b;
  c.lipschitz_eta = lipschitz_eta;
  return c;
}

HadamardOptions VerifySettings::hadamard() const {
  HadamardOptions h;
  h.ignorance_trials = ignorance_trials;
  h.n_variants = n_variants;
  h.n_perturbations = n_perturbations;
  h.epsilon = epsilon;
  h.constants = constants();
  return h;
}

namespace {

RunConfig parse_checked(const json& j) {
  const Node root(j, "config");
  root.allow({"schema_version", "operator", "nonlinearity", "delay", "initial", "solver", "verify"});
  const json& version = root.raw("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    root.fail(fmt::format("unsupported schema_version (expected {})", kSchemaVersion));
  }
  auto op = parse_operator(root.child("operator"));
  const SpaceMeta space = op.space();
  auto nl = parse_nonlinearity(root.child("nonlinearity"), space);
  const Node dn = root.child("delay");
  const double r = dn.number("horizon");
  if (!(r > 0.0)) dn.fail("'horizon' must be positive");
  auto delay = parse_delay(dn, r);
  auto initial = parse_initial(root.child("initial"), space, r);
  const SolverConfig solver = root.has("solver") ? parse_solver(root.child("solver")) : SolverConfig{};
  try {
    solver.validate(r);
  } catch (const ConstructionError& e) {
    throw ConfigError(e.what());
  }
  const VerifySettings verify = root.has("verify") ? parse_verify(root.child("verify")) : VerifySettings{};
  auto problem = std::make_shared<const ProblemSpec>(ProblemSpec{std::move(op), std::move(nl), std::move(delay)});
  try {
    problem->validate();
  } catch (const ConstructionError& e) {
    throw ConfigError(e.what());
  }
  const std::string canonical = j.dump();
  return RunConfig{j, std::move(problem), std::move(initial), solver, verify, content_hash(canonical)};
}

}  // namespace

RunConfig parse_config(const json& j) {
  try {
    return parse_checked(j);
  } catch (const ConstructionError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + '\0' + text;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::vector<HistorySegment> make_ensemble(const SpaceMeta& space, double horizon, std::size_t count,
                                          double radius, std::uint64_t seed, std::size_t n_intervals) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<HistorySegment> out;
  for (std::size_t m = 0; m < count; ++m) {
    // Positive combination of the first three sine modes, oscillating in theta.
    const double c1 = 0.5 + u(rng);
    const double c2 = 0.5 * u(rng);
    const double c3 = 0.3 * u(rng);
    const double freq = 1.0 + 3.0 * u(rng);
    const double phase = 2.0 * std::numbers::pi * u(rng);
    StateVector shape(space);
    for (std::size_t j = 0; j < space.size; ++j) {
      if (space.is_pde()) {
        const double x = std::numbers::pi * space.grid_point(j) / space.length;
        shape[j] = std::max(0.0, c1 * std::sin(x) + c2 * std::sin(2 * x) + c3 * std::sin(3 * x));
      } else {
        shape[j] = c1 + c2 * u(rng);
      }
    }
    auto seg = HistorySegment::sample(
        [&](double th) { return (1.0 + 0.5 * std::sin(freq * th + phase)) * shape; }, horizon, n_intervals);
    const double target = radius * (0.2 + 0.8 * u(rng));
    out.push_back(seg.scaled(target / seg.sup_norm()));
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sdd
