#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdd/delay.hpp"
#include "sdd/solver.hpp"

namespace sdd {

/// Constants entering the local continuous-dependence estimate
///   max_{[-r,t1]} |u^k - u| <= (1 - L_B t1 [1 + L L_eta])^{-1} |phi^k - phi|_C.
struct WellPosednessConstants {
  double lipschitz_b = 0.0;      // L_B
  double lipschitz_phi = 0.0;    // L, phi belongs to the class of L-Lipschitz segments
  double lipschitz_eta = 0.0;    // L_eta on the omega-neighbourhood
  double omega = 0.5;
  double q = 0.5;
  /// Radius of the neighbourhood U_alpha(phi) on which eta(psi) >= 3/4 eta(phi).
  double alpha = 0.0;
  /// The admissible horizon t1 (filled in by the dependence probe).
  double t1 = 0.0;
};

struct ConstantsRequest {
  double omega = 0.5;
  double q = 0.5;
  std::size_t lipschitz_trials = 400;
  std::uint64_t seed = 0;
  /// Overrides for the measured values.
  std::optional<double> lipschitz_b;
  std::optional<double> lipschitz_phi;
  std::optional<double> lipschitz_eta;
};

/// Measure L_B on the state range [lo, hi], L = Lipschitz quotient of phi and
/// a sampled L_eta on the omega-ball around phi; alpha = min(omega, eta(phi)/(4 L_eta), 1).
WellPosednessConstants measure_constants(const ProblemSpec& problem, const HistorySegment& phi,
                                         const ConstantsRequest& req, double range_lo, double range_hi,
                                         double integral_dx = 1e-2);

struct UniquenessReport {
  bool certified = false;
  /// "certified", "diverged", or "precondition unverified".
  std::string status;
  double max_divergence = 0.0;
  double threshold = 0.0;
  std::size_t variants = 0;
  std::size_t picard_steps = 0;
  std::string precondition;
};

/// Re-solve with randomised first Picard iterates and report the largest
/// pairwise sup-norm divergence on [0, T]. Passes iff it is <= 10 picard_tol.
/// Opaque delays are first fuzzed for the ignorance property; if that fails
/// or their segment is unknown, the probe refuses to certify.
UniquenessReport uniqueness_probe(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                                  const SolverConfig& cfg, std::size_t n_variants, std::uint64_t seed,
                                  std::size_t ignorance_trials = 1000);

struct DependenceReport {
  bool passes = true;
  WellPosednessConstants constants;
  double eta_phi = 0.0;
  double t_cap = 0.0;   // min{(3/4) eta(phi), q / (L_B [1 + L L_eta])}
  double t_exit = 0.0;  // first exit of the reference solution from U_alpha(phi)
  double bound_factor = 1.0;
  double bound_slack = 0.05;
  /// max_k of measured / (bound * |phi^k - phi|_C); passes iff <= 1 + slack.
  double worst_ratio = 0.0;
  /// max_k of measured / |phi^k - phi|_C.
  double worst_amplification = 0.0;
  std::size_t within = 0;
  std::size_t perturbations = 0;
};

/// Numerical check of the local continuous-dependence estimate around phi
/// with `n_perturbations` random phi^k, |phi^k - phi|_C <= epsilon.
/// Throws DomainError if eta(phi) = 0, phi is not L-Lipschitz, or t1 <= dt.
DependenceReport continuous_dependence_probe(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                                             const SolverConfig& cfg, const ConstantsRequest& req,
                                             std::size_t n_perturbations, double epsilon, std::uint64_t seed);

/// Solved values of one ensemble member on the tail of a long run.
struct TailSample {
  std::vector<double> times;
  std::vector<StateVector> values;
};

struct AttractorDiagnostics {
  bool dissipative = true;
  std::string note;
  /// Sup of |u_t|_C over the tail (last 20%) of every ensemble run.
  double radius = 0.0;
  /// sup |B| / lambda_min, an a priori ceiling for the absorbing radius.
  double a_priori_radius = 0.0;
  double t_long = 0.0;
  std::vector<TailSample> tails;
  std::vector<HistorySegment> windows;
};

/// Run every initial segment to T_long and collect tail statistics.
/// Requires a bounded nonlinearity.
AttractorDiagnostics dissipation_probe(std::shared_ptr<const ProblemSpec> problem, const SolverConfig& cfg,
                                       const std::vector<HistorySegment>& ensemble, double t_long,
                                       std::size_t windows_per_member = 8);

struct HolderReport {
  double holder_half_constant = 0.0;  // L0 estimate: max |du| / |dt|^{1/2}
  double lipschitz_constant = 0.0;    // L~ estimate: max Lipschitz quotient of tail windows
  std::optional<double> exponent_fit;  // least-squares slope of log|du| against log|dt|
  std::size_t pairs = 0;
};

/// Samples time pairs with |dt| < 1 (log-uniform) on the tails. Throws
/// EvaluationError if fewer than 10 valid pairs exist.
HolderReport holder_regularity_probe(const AttractorDiagnostics& diag, std::size_t pairs, std::uint64_t seed);

struct HadamardOptions {
  std::size_t ignorance_trials = 1000;
  std::size_t n_variants = 5;
  std::size_t n_perturbations = 20;
  double epsilon = 1e-3;
  ConstantsRequest constants;
};

/// Ignorance fuzzing, solve, uniqueness and continuous dependence in one
/// report. A failing section is recorded, not thrown.
nlohmann::json hadamard_report(std::shared_ptr<const ProblemSpec> problem, const HistorySegment& phi,
                               const SolverConfig& cfg, const HadamardOptions& opt, std::uint64_t seed);

nlohmann::json to_json(const SegmentReport& s);
nlohmann::json to_json(const IgnoranceReport& r);
nlohmann::json to_json(const UniquenessReport& r);
nlohmann::json to_json(const DependenceReport& r);
nlohmann::json to_json(const AttractorDiagnostics& d);
nlohmann::json to_json(const HolderReport& h);
nlohmann::json to_json(const HistorySegment& h);

}  // namespace sdd
