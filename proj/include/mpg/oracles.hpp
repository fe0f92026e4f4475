#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpg/game.hpp"

namespace mpg {

// Brute-force oracles that certify the main build. None of them calls into
// the exact evaluator or the PMD kernels; they share only the game model.

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

struct OracleReport {
  std::string oracle;
  std::string instance;
  double main_value = 0.0;
  double oracle_value = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

OracleReport make_report(std::string oracle, std::string instance, double main_value, double oracle_value,
                         double tolerance);

enum class EnumerationScope { kPlayer, kJoint };

/// Lexicographic enumeration of deterministic stationary policies, state 0
/// being the most significant digit.
///
/// Player scope yields one action per state for the chosen player
/// (|A_i|^|S| policies); joint scope yields one joint action per state
/// (|A|^|S| policies, which are exactly the deterministic product policies).
class DeterministicPolicies {
 public:
  DeterministicPolicies(const MarkovGame& game, EnumerationScope scope, int player = 0,
                        std::size_t cap = kDefaultEnumerationCap);

  std::size_t count() const { return count_; }
  // Per-state choice: an action of `player` (player scope) or a joint action index.
  std::vector<std::size_t> choices(std::size_t index) const;
  JointPolicy joint_policy(std::size_t index) const;
  // Replaces `player`'s rows in `base` by the deterministic policy `index` (player scope).
  JointPolicy deviate(const JointPolicy& base, std::size_t index) const;

 private:
  const MarkovGame* game_;
  EnumerationScope scope_;
  int player_;
  std::size_t radix_;
  std::size_t count_;
};

/// Projection onto the simplex by enumerating every candidate support set.
std::vector<double> projection_oracle(std::span<const double> v);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double truncation_error = 0.0;
  int horizon = 0;
};

/// Horizon H with gamma^H max|r| / (1 - gamma) <= truncation_error.
int truncation_horizon(double discount, double max_abs_reward, double truncation_error);

/// Rollout estimate of V_i^pi(rho). Trajectory k draws from
/// CounterStream(seed, k), so the estimate does not depend on sampling order.
MonteCarloEstimate mc_value_oracle(const MarkovGame& game, const JointPolicy& policy, int player,
                                   std::size_t num_trajectories, double truncation_error, std::uint64_t seed);

/// V_i^pi(mu) by a dense Gaussian elimination independent of the exact
/// evaluator; rows may be arbitrary finite weights (multilinear extension).
double oracle_value(const MarkovGame& game, const JointPolicy& policy, int player, std::span<const double> mu);
/// Same with reward phi.
double oracle_potential(const MarkovGame& game, std::span<const double> phi, const JointPolicy& policy,
                        std::span<const double> mu);

/// Central difference of V_i(mu) in the entry pi_i(a_i|s), h in [1e-7, 1e-3].
double fd_gradient_oracle(const MarkovGame& game, const JointPolicy& policy, int player, int s, int a_i,
                          std::span<const double> mu, double h);
double fd_potential_gradient_oracle(const MarkovGame& game, std::span<const double> phi, const JointPolicy& policy,
                                    int player, int s, int a_i, std::span<const double> mu, double h);

/// Best deviation value for `player` by exhaustive enumeration of its
/// deterministic policies, evaluated with oracle_value at rho.
double enumerated_best_response_value(const MarkovGame& game, const JointPolicy& policy, int player,
                                      std::size_t cap = kDefaultEnumerationCap);

}  // namespace mpg
