#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpg/generators.hpp"
#include "mpg/metrics.hpp"
#include "mpg/oracles.hpp"
#include "mpg/pmd.hpp"
#include "mpg/report.hpp"

namespace mpg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A game whose MPG residual is not below 1e-10.
struct MpgVerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigSchemaVersion = 1;

enum class GameFamily { kIdenticalInterest, kDummyTerm, kCongestion, kPairwiseTeam, kFile };

std::string_view to_string(GameFamily family);

struct GameSource {
  GameFamily family = GameFamily::kIdenticalInterest;
  int num_players = 2;
  int num_states = 1;
  std::vector<int> action_counts;  // empty: actions_per_player for everyone
  int actions_per_player = 2;
  double discount = 0.9;
  int num_facilities = 2;
  CostModel cost_model = CostModel::kLinearLoad;
  double dummy_scale = 1.0;
  std::filesystem::path path;  // family == kFile, resolved against the config directory

  std::vector<int> resolved_action_counts() const;
};

struct AlgorithmSpec {
  std::string label;  // defaults to the regularizer name
  Regularizer regularizer = Regularizer::kKl;
  std::optional<double> step_size;  // nullopt: theorem step size
  bool advantage_form = true;
};

struct CertifyOptions {
  std::size_t mc_trajectories = 20000;
  double mc_truncation = 1e-4;
  double fd_step = 1e-5;
  int projection_vectors = 200;
  std::size_t enumeration_cap = kDefaultEnumerationCap;
};

struct ExperimentConfig {
  std::string name = "experiment";
  GameSource game;
  std::vector<AlgorithmSpec> algorithms;
  int num_iterations = 100;
  std::vector<double> epsilons = {0.05};
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> sweep_num_players;  // empty: no sweep axis
  bool stop_at_epsilon = false;
  bool bound_nu_rho = true;
  bool bound_nu_uniform = true;
  std::optional<std::filesystem::path> output_dir;
  CertifyOptions certify;
};

/// JSON config with "schema_version": 1. Unknown keys are rejected at every
/// level. Relative game file paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Normalized JSON of a config; equal configs give equal text.
std::string canonical_config(const ExperimentConfig& config);

/// One (game instance, algorithm, seed) unit of work.
struct CellSpec {
  GameSource game;  // num_players resolved from the sweep axis
  AlgorithmSpec algorithm;
  std::uint64_t seed = 0;
  int num_iterations = 100;
  std::vector<double> epsilons;
  bool stop_at_epsilon = false;
  bool trust_mpg = false;
  bool bound_nu_rho = true;
  bool bound_nu_uniform = true;
  CertifyOptions certify;

  std::string id() const;  // "<label>/N<n>/seed<k>"
};

std::vector<CellSpec> expand_cells(const ExperimentConfig& config, bool trust_mpg);

/// Builds the cell's game; file games must carry a potential.
GameWithPotential build_game(const GameSource& source, std::uint64_t seed);

/// SHA-256 over the canonical JSON of the cell plus the game file bytes, if any.
std::string content_hash(const CellSpec& cell);

struct Certification {
  OracleReport report;
  bool skipped = false;
  std::string note;

  bool ok() const { return skipped || report.pass; }
};

struct CellResult {
  CellSpec spec;
  std::string hash;
  int num_players = 0;
  int num_states = 0;
  int total_actions = 0;
  double discount = 0.0;
  double phi_max = 0.0;
  double step_size = 0.0;
  std::optional<double> mpg_residual;  // nullopt when trusted
  MismatchReport mismatch;
  RegretTrace trace;
  // Per epsilon of the spec.
  std::vector<std::optional<int>> iterations_to;
  std::vector<double> iteration_bound;         // KL uses the empirical c
  std::vector<double> iteration_bound_c_free;  // KL with c = 1; equals iteration_bound for Euclidean
  std::vector<Certification> certifications;
  Table trace_table;
  double wall_seconds = 0.0;

  bool all_pass() const;
};

/// Verifies the MPG property (unless trusted), runs PMD, tracks regret and
/// bounds, and certifies the run against the oracles. Deterministic in `spec`.
/// Throws MpgVerificationError when MPG verification fails and EnumerationCapExceeded
/// (with a hint) when it cannot be attempted.
CellResult run_cell(const CellSpec& spec);

/// Trace columns: t, worst_gap, gap_<i>..., potential, running_nash_regret,
/// thm_bound_at_t, sq_displacement | log_sum_logZ, thm_bound_nu_rho,
/// thm_bound_nu_uniform, improvement_slack, then c_running for KL.
Table trace_table(const RegretTrace& trace, const std::vector<double>& bound_at_t,
                  const std::vector<double>& bound_nu_rho, const std::vector<double>& bound_nu_uniform);

Table summary_table(std::span<const CellResult> cells);
Table certification_table(std::span<const CellResult> cells);
/// One row per (algorithm, N, epsilon): seed medians of iterations-to-epsilon
/// and of the closed-form iteration bounds, plus growth relative to the
/// smallest N of the same algorithm. Throws ConfigError for cells that differ
/// in anything but algorithm, N and seed.
Table scaling_summary(std::span<const CellResult> cells);

/// Closed-form step sizes and bounds per (algorithm, N, seed, epsilon).
Table bounds_table(const ExperimentConfig& config);
/// Oracle suite on the configured instances at a seeded random policy.
std::vector<Certification> certify_instances(const ExperimentConfig& config, bool trust_mpg);

double median(std::vector<double> values);

}  // namespace mpg
