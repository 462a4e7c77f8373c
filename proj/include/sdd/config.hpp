#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdd/solver.hpp"
#include "sdd/verify.hpp"

namespace sdd {

inline constexpr int kSchemaVersion = 1;

/// Settings of the [verify] section.
struct VerifySettings {
  std::optional<std::uint64_t> seed;
  double omega = 0.5;
  double q = 0.5;
  double epsilon = 1e-3;
  std::size_t n_perturbations = 20;
  std::size_t n_variants = 5;
  std::size_t ignorance_trials = 1000;
  std::size_t lipschitz_trials = 400;
  double t_long = 100.0;
  std::size_t ensemble_size = 8;
  double ensemble_radius = 10.0;
  std::size_t holder_pairs = 2000;
  std::optional<double> lipschitz_b;
  std::optional<double> lipschitz_eta;

  ConstantsRequest constants() const;
  HadamardOptions hadamard() const;
};

/// A parsed and cross-validated configuration file.
struct RunConfig {
  nlohmann::json source;
  std::shared_ptr<const ProblemSpec> problem;
  HistorySegment initial;
  SolverConfig solver;
  VerifySettings verify;
  /// Git-style blob SHA-1 of the canonical (sorted, compact) config text.
  std::string hash;
};

/// Throws ConfigError for anything malformed or inconsistent, before any compute.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// SHA-1 of "blob <size>\0<text>", lower-case hex.
std::string content_hash(const std::string& text);

/// `count` smooth nonnegative segments with |phi|_C in (0, radius], drawn from `seed`.
std::vector<HistorySegment> make_ensemble(const SpaceMeta& space, double horizon, std::size_t count,
                                          double radius, std::uint64_t seed, std::size_t n_intervals = 100);

/// Write to a sibling temporary file, then rename over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace sdd
