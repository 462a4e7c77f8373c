// sdd: simulate, inspect and verify state-dependent delay equations.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sdd/config.hpp"
#include "sdd/errors.hpp"
#include "sdd/verify.hpp"

namespace {

using nlohmann::json;
using namespace sdd;

enum Exit : int { kPass = 0, kCertifiedFail = 1, kRuntime = 2, kConfig = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sdd");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SDD_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring SDD_LOG={}", v);
  }
}

json diagnostics_json(const Diagnostics& d, std::size_t picard_steps) {
  return {{"delay_clamps", d.delay_clamps},
          {"saturations", d.saturations},
          {"negativity_warnings", d.negativity_warnings},
          {"picard_steps", picard_steps}};
}

std::size_t count_picard(const Trajectory& tr) {
  std::size_t n = 0;
  for (const auto& s : tr.steps()) n += s.picard_iterations > 0 ? 1 : 0;
  return n;
}

json envelope(const RunConfig& rc, const std::string& command) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", rc.source}, {"config_hash", rc.hash}};
}

void emit(const json& report, const std::string& out) {
  const std::string text = report.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_atomic(out, text);
    spdlog::info("wrote {}", out);
  }
}

std::uint64_t require_seed(const RunConfig& rc, const std::optional<std::uint64_t>& cli_seed) {
  if (cli_seed) return *cli_seed;
  if (rc.verify.seed) return *rc.verify.seed;
  throw ConfigError("a seed is required for this suite (--seed or verify.seed)");
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config, const std::string& out, const std::string& residual_out,
                 std::size_t residual_samples, bool with_history) {
  const RunConfig rc = load_config(config);
  spdlog::info("config {} hash {}", config, rc.hash);
  const Trajectory tr = solve(rc.problem, rc.initial, rc.solver);
  const auto& d = tr.diagnostics();
  if (d.delay_clamps) spdlog::warn("{} delay evaluations were clamped", d.delay_clamps);
  if (d.saturations) spdlog::warn("{} nonlinearity evaluations saturated", d.saturations);
  if (d.negativity_warnings) spdlog::warn("{} steps produced markedly negative states", d.negativity_warnings);
  std::ostringstream csv;
  write_csv(csv, tr, rc.solver.record_stride, with_history);
  write_atomic(out, csv.str());
  if (!residual_out.empty()) {
    std::vector<double> samples;
    for (std::size_t i = 1; i <= residual_samples; ++i) {
      samples.push_back(tr.end_time() * static_cast<double>(i) / static_cast<double>(residual_samples));
    }
    json rep = envelope(rc, "simulate");
    rep["mild_residual"] = mild_residual(tr, samples);
    rep["sample_times"] = samples;
    rep["dt"] = rc.solver.dt;
    rep["warnings"] = diagnostics_json(d, count_picard(tr));
    emit(rep, residual_out);
  }
  return kPass;
}

int cmd_check_delay(const std::string& config, const std::optional<std::uint64_t>& seed, const std::string& out) {
  const RunConfig rc = load_config(config);
  const auto& eta = rc.problem->delay;
  json rep = envelope(rc, "check-delay");
  rep["variant"] = eta.variant_name();
  rep["eta"] = eta.evaluate(rc.initial, {rc.solver.integral_dx, nullptr});
  int code = kPass;
  try {
    rep["segment"] = to_json(eta.dependency_segment(rc.initial));
  } catch (const EvaluationError& e) {
    rep["segment"] = nullptr;
    rep["note"] = e.what();
    code = kCertifiedFail;
  }
  const auto s = seed ? seed : rc.verify.seed;
  if (s && code == kPass) {
    const auto ign = verify_ignorance(eta, rc.initial, rc.verify.ignorance_trials, *s, {rc.solver.integral_dx, nullptr});
    rep["ignorance"] = to_json(ign);
    if (!ign.passes) code = kCertifiedFail;
  }
  emit(rep, out);
  return code;
}

json attractor_sections(const RunConfig& rc, double t_long, std::size_t members, std::uint64_t seed, bool& pass) {
  const auto ensemble =
      make_ensemble(rc.problem->space(), rc.problem->horizon(), members, rc.verify.ensemble_radius, seed);
  const auto diag = dissipation_probe(rc.problem, rc.solver, ensemble, t_long);
  json sections;
  sections["dissipation"] = to_json(diag);
  pass = diag.dissipative;
  if (diag.dissipative) {
    const auto holder = holder_regularity_probe(diag, rc.verify.holder_pairs, seed);
    const bool finite = std::isfinite(holder.holder_half_constant) && std::isfinite(holder.lipschitz_constant);
    sections["regularity"] = {{"pass", finite},
                              {"constants", {{"pairs_requested", rc.verify.holder_pairs}}},
                              {"measurements", to_json(holder)}};
    pass = pass && finite;
  }
  return sections;
}

int cmd_verify(const std::string& config, const std::string& suite, const std::optional<std::uint64_t>& cli_seed,
               const std::string& out, bool timing) {
  const RunConfig rc = load_config(config);
  const std::uint64_t seed = require_seed(rc, cli_seed);
  const auto t0 = std::chrono::steady_clock::now();
  json rep = envelope(rc, "verify");
  rep["suite"] = suite;
  rep["seed"] = seed;
  json sections = json::object();
  bool pass = true;

  if (suite == "ignorance") {
    const auto ign =
        verify_ignorance(rc.problem->delay, rc.initial, rc.verify.ignorance_trials, seed, {rc.solver.integral_dx, nullptr});
    sections["ignorance"] = to_json(ign);
    pass = ign.passes;
  } else if (suite == "uniqueness") {
    const auto u = uniqueness_probe(rc.problem, rc.initial, rc.solver, rc.verify.n_variants, seed,
                                    rc.verify.ignorance_trials);
    sections["uniqueness"] = to_json(u);
    pass = u.certified;
  } else if (suite == "dependence") {
    const auto d = continuous_dependence_probe(rc.problem, rc.initial, rc.solver, rc.verify.constants(),
                                               rc.verify.n_perturbations, rc.verify.epsilon, seed);
    sections["dependence"] = to_json(d);
    pass = d.passes;
  } else if (suite == "attractor") {
    sections = attractor_sections(rc, rc.verify.t_long, rc.verify.ensemble_size, seed, pass);
  } else {  // all
    const json h = hadamard_report(rc.problem, rc.initial, rc.solver, rc.verify.hadamard(), seed);
    sections = h.at("sections");
    rep["regime"] = h.at("regime");
    rep["well_posedness"] = h.at("well_posedness");
    pass = h.at("well_posedness") == "certified";
    if (rc.problem->nonlinearity.bounded()) {
      bool apass = true;
      const json att = attractor_sections(rc, rc.verify.t_long, rc.verify.ensemble_size, seed, apass);
      for (const auto& [k, v] : att.items()) sections[k] = v;
      pass = pass && apass;
    } else {
      sections["dissipation"] = {{"pass", true}, {"skipped", "nonlinearity is unbounded"}};
    }
  }
  if (suite != "ignorance") {
    const Trajectory tr = solve(rc.problem, rc.initial, rc.solver);
    rep["warnings"] = diagnostics_json(tr.diagnostics(), count_picard(tr));
  }
  rep["sections"] = std::move(sections);
  rep["pass"] = pass;
  if (timing) {
    rep["timing_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  emit(rep, out);
  if (!pass) spdlog::warn("suite '{}' did not pass", suite);
  return pass ? kPass : kCertifiedFail;
}

int cmd_attractor(const std::string& config, std::optional<double> t_long, std::optional<std::size_t> members,
                  const std::optional<std::uint64_t>& cli_seed, const std::string& out) {
  const RunConfig rc = load_config(config);
  const std::uint64_t seed = require_seed(rc, cli_seed);
  const double tl = t_long.value_or(rc.verify.t_long);
  const std::size_t m = members.value_or(rc.verify.ensemble_size);
  if (!(tl > 0.0) || m == 0) throw ConfigError("T_long and ensemble size must be positive");
  json rep = envelope(rc, "attractor");
  rep["seed"] = seed;
  rep["t_long"] = tl;
  rep["ensemble_size"] = m;
  bool pass = true;
  rep["sections"] = attractor_sections(rc, tl, m, seed, pass);
  rep["pass"] = pass;
  emit(rep, out);
  return pass ? kPass : kCertifiedFail;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Solver and verification harness for state-dependent delay equations"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "Solve the configured problem and write the trajectory as CSV");
  std::string residual_out;
  std::size_t residual_samples = 10;
  bool no_history = false;
  sim->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Trajectory CSV")->required();
  sim->add_option("--residual", residual_out, "Also write the mild-solution residual as JSON");
  sim->add_option("--residual-samples", residual_samples, "Sample times for the residual")->check(CLI::PositiveNumber);
  sim->add_flag("--no-history", no_history, "Omit the initial segment rows");

  auto* chk = app.add_subcommand("check-delay", "Report the delay value and delayed segment of the initial data");
  chk->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  chk->add_option("--seed", seed, "Also fuzz the ignorance property with this seed");
  chk->add_option("--out", out, "Output JSON (default stdout)");

  auto* ver = app.add_subcommand("verify", "Run a verification suite");
  std::string suite = "all";
  bool timing = false;
  ver->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  ver->add_option("--suite", suite, "Suite")
      ->check(CLI::IsMember({"ignorance", "uniqueness", "dependence", "attractor", "all"}));
  ver->add_option("--seed", seed, "Random seed (required unless verify.seed is set)");
  ver->add_option("--out", out, "Output JSON (default stdout)");
  ver->add_flag("--timing", timing, "Include wall-clock time (breaks byte-identical reports)");

  auto* att = app.add_subcommand("attractor", "Long-run ensemble dissipation and regularity diagnostics");
  std::optional<double> t_long;
  std::optional<std::size_t> members;
  att->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  att->add_option("--t-long", t_long, "Length of each run");
  att->add_option("--ensemble-size", members, "Number of initial segments");
  att->add_option("--seed", seed, "Random seed (required unless verify.seed is set)");
  att->add_option("--out", out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sim) return cmd_simulate(config, out, residual_out, residual_samples, !no_history);
    if (*chk) return cmd_check_delay(config, seed, out);
    if (*ver) return cmd_verify(config, suite, seed, out, timing);
    return cmd_attractor(config, t_long, members, seed, out);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
}
