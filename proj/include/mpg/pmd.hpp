#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mpg/evaluation.hpp"
#include "mpg/game.hpp"

namespace mpg {

enum class Regularizer { kEuclidean, kKl };

std::string_view to_string(Regularizer reg);
// Accepts "euclidean" and "kl"; throws std::invalid_argument otherwise.
Regularizer parse_regularizer(std::string_view name);

struct PmdConfig {
  Regularizer regularizer = Regularizer::kKl;
  // Step size eta of the Q-form update; nullopt selects theorem_step_size.
  std::optional<double> step_size;
  int num_iterations = 1;
  // KL only: exponentiate eta_adv / (1 - gamma) * avgA with eta_adv = (1 - gamma) eta.
  // Same iterates as the Q-form up to rounding.
  bool advantage_form = true;
  // Defaults to uniform. KL requires strictly positive rows.
  std::optional<JointPolicy> initial_policy;
};

/// One PMD step pi^(t) -> pi^(t+1), with quantities evaluated at both ends.
struct IterationRecord {
  int t = 0;
  JointPolicy policy;  // pi^(t)
  double potential = 0.0;       // Phi^{pi^(t)}(rho)
  double potential_next = 0.0;  // Phi^{pi^(t+1)}(rho)
  // KL: log Z_t^{i,s} in the advantage scale, log sum_a pi exp(eta avgA). [i][s]
  std::vector<std::vector<double>> log_z;
  // ||pi_{i,s}^(t+1) - pi_{i,s}^(t)||^2, both regularizers. [i][s]
  std::vector<std::vector<double>> sq_displacement;
  // sum_s d_rho^(t+1)(s) sum_i of log_z (KL) or sq_displacement (Euclidean).
  double weighted_term = 0.0;
  // Lower bound on potential_next - potential from the improvement
  // inequalities (mu = rho), and the slack (difference minus bound).
  double improvement_bound = 0.0;
  double improvement_slack = 0.0;
};

struct StepResult {
  JointPolicy policy;
  std::vector<std::vector<double>> log_z;
  std::vector<std::vector<double>> sq_displacement;
};

/// Euclidean: (1 - gamma) / (4 phi_max sum_i |A_i|). KL: (1 - gamma) / (2 phi_max sqrt N).
double theorem_step_size(Regularizer reg, const MarkovGame& game, const PotentialSpec& potential);
double theorem_step_size(Regularizer reg, double discount, double phi_max, int num_players, int total_actions);

/// Euclidean projection onto the probability simplex (sort and threshold).
std::vector<double> project_simplex(std::span<const double> v);

/// pi <- Proj(pi + eta q). Returns ||new - old||^2.
double euclidean_row_update(std::span<double> row, std::span<const double> q, double eta);
/// pi <- pi exp(eta x) / Z on the support of pi, computed in log space.
/// Returns log Z. Zero entries stay zero.
double kl_row_update(std::span<double> row, std::span<const double> x, double eta);
/// log sum_a pi(a) exp(eta x(a)) without modifying the row.
double log_normalizer(std::span<const double> row, std::span<const double> x, double eta);

/// Simultaneous update of every player from the same evaluation of `policy`.
StepResult pmd_step(const MarkovGame& game, const JointPolicy& policy, const EvalBundle& bundle, Regularizer reg,
                    double eta, bool advantage_form = true);

/// Lower bounds on the improvement Phi^(t+1)(mu) - Phi^(t)(mu), given d_mu^(t+1).
/// Euclidean: (1/(2 eta (1-gamma)) - phi_max sum|A_i| / (1-gamma)^2) sum_s d(s) sum_i ||dpi||^2.
/// KL: (1/eta_adv) sum_s d(s) sum_i log Z, eta_adv = (1 - gamma) eta.
double euclidean_improvement_bound(const MarkovGame& game, const PotentialSpec& potential, double eta,
                                   std::span<const double> next_occupancy,
                                   const std::vector<std::vector<double>>& sq_displacement);
double kl_improvement_bound(const MarkovGame& game, double eta, std::span<const double> next_occupancy,
                            const std::vector<std::vector<double>>& log_z);
/// sum_s occupancy(s) sum_i per_player[i][s].
double occupancy_weighted_sum(std::span<const double> occupancy, const std::vector<std::vector<double>>& per_player);
/// Largest advantage-scale step for which the KL bound is claimed: (1-gamma)^2 / (phi_max sqrt N).
double kl_improvement_step_limit(const MarkovGame& game, const PotentialSpec& potential);

struct PmdTrace {
  Regularizer regularizer = Regularizer::kKl;
  double step_size = 0.0;            // eta (Q-form scale)
  double advantage_step_size = 0.0;  // (1 - gamma) eta
  bool advantage_form = true;
  std::vector<IterationRecord> records;  // t = 1..T
  JointPolicy final_policy;              // pi^(T+1)
};

/// Called after each step with the record for t and the evaluation of pi^(t).
/// Returning false stops the run after that record.
using PmdObserver = std::function<bool(const IterationRecord&, const EvalBundle&)>;

/// Runs T steps from pi^(1) = initial policy. Deterministic in its inputs.
PmdTrace run_pmd(const MarkovGame& game, const PotentialSpec& potential, const PmdConfig& config,
                 const PmdObserver& observer = {});

}  // namespace mpg
