#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpg {

/// Raised when game, potential, or policy tables violate their invariants.
class GameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exhaustive enumeration would exceed its configured cap.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal numerical failure (singular system, negative Nash gap, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDistributionTolerance = 1e-12;

// Joint actions are indexed row-major over (a_1, ..., a_N): player 0 is the
// most significant digit, player N-1 varies fastest.
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> action_counts);

  int num_players() const { return static_cast<int>(counts_.size()); }
  std::size_t size() const { return size_; }
  int count(int player) const { return counts_[player]; }
  const std::vector<int>& counts() const { return counts_; }
  std::size_t stride(int player) const { return strides_[player]; }

  int digit(std::size_t joint, int player) const {
    return static_cast<int>((joint / strides_[player]) % counts_[player]);
  }
  void decode(std::size_t joint, std::span<int> out) const;
  std::size_t encode(std::span<const int> actions) const;

  // Joint index with player's digit replaced by `action`.
  std::size_t with_action(std::size_t joint, int player, int action) const {
    return joint - static_cast<std::size_t>(digit(joint, player)) * strides_[player] +
           static_cast<std::size_t>(action) * strides_[player];
  }

 private:
  std::vector<int> counts_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Unvalidated tables; MarkovGame::create checks every invariant.
struct GameTables {
  int num_players = 0;
  int num_states = 0;
  std::vector<int> action_counts;
  double discount = 0.0;
  std::vector<double> initial_dist;
  // [s][joint_a][s'] flattened.
  std::vector<double> transition;
  // rewards[i] is [s][joint_a] flattened.
  std::vector<std::vector<double>> rewards;
};

/// A finite discounted Markov game. Immutable once created.
class MarkovGame {
 public:
  static MarkovGame create(GameTables tables);

  int num_players() const { return tables_.num_players; }
  int num_states() const { return tables_.num_states; }
  const std::vector<int>& action_counts() const { return tables_.action_counts; }
  int action_count(int player) const { return tables_.action_counts[player]; }
  int total_actions() const;
  double discount() const { return tables_.discount; }
  std::span<const double> initial_dist() const { return tables_.initial_dist; }
  const JointActionSpace& joint() const { return joint_; }
  std::size_t num_joint_actions() const { return joint_.size(); }

  std::span<const double> transition_row(int s, std::size_t a) const {
    const auto n = static_cast<std::size_t>(tables_.num_states);
    return {tables_.transition.data() + (static_cast<std::size_t>(s) * joint_.size() + a) * n, n};
  }
  double reward(int player, int s, std::size_t a) const {
    return tables_.rewards[player][static_cast<std::size_t>(s) * joint_.size() + a];
  }
  std::span<const double> rewards(int player) const { return tables_.rewards[player]; }

  const GameTables& tables() const { return tables_; }

  // True when every transition row is independent of the joint action.
  bool action_independent_dynamics() const;

 private:
  explicit MarkovGame(GameTables tables);

  GameTables tables_;
  JointActionSpace joint_;
};

/// Statewise potential phi(s, a) over joint actions, plus phi_max = max |phi|.
class PotentialSpec {
 public:
  PotentialSpec() = default;
  PotentialSpec(std::vector<double> phi, std::size_t num_states, std::size_t num_joint_actions);

  double phi(int s, std::size_t a) const { return phi_[static_cast<std::size_t>(s) * num_joint_ + a]; }
  std::span<const double> table() const { return phi_; }
  double phi_max() const { return phi_max_; }
  bool compatible_with(const MarkovGame& game) const;

 private:
  std::vector<double> phi_;
  std::size_t num_joint_ = 0;
  double phi_max_ = 0.0;
};

struct GameWithPotential {
  MarkovGame game;
  PotentialSpec potential;
};

/// Per-player, per-state probability rows. rows[i] is [s][a_i] flattened.
class JointPolicy {
 public:
  JointPolicy() = default;
  JointPolicy(std::vector<int> action_counts, int num_states);

  static JointPolicy uniform(const MarkovGame& game);
  // One action per (player, state): choices[i][s].
  static JointPolicy deterministic(const MarkovGame& game, const std::vector<std::vector<int>>& choices);

  int num_players() const { return static_cast<int>(counts_.size()); }
  int num_states() const { return num_states_; }
  int action_count(int player) const { return counts_[player]; }

  std::span<double> row(int player, int s) {
    return {probs_[player].data() + static_cast<std::size_t>(s) * counts_[player],
            static_cast<std::size_t>(counts_[player])};
  }
  std::span<const double> row(int player, int s) const {
    return {probs_[player].data() + static_cast<std::size_t>(s) * counts_[player],
            static_cast<std::size_t>(counts_[player])};
  }
  double prob(int player, int s, int a) const {
    return probs_[player][static_cast<std::size_t>(s) * counts_[player] + a];
  }
  std::span<const double> player_table(int player) const { return probs_[player]; }
  std::span<double> player_table(int player) { return probs_[player]; }

  // Product-policy probability of a joint action at state s.
  double joint_prob(const JointActionSpace& space, int s, std::size_t a) const;

  bool matches(const MarkovGame& game) const;
  // Throws GameError when any row is not a distribution (within tolerance).
  void validate(double tolerance = kDistributionTolerance) const;
  bool strictly_positive() const;

  friend bool operator==(const JointPolicy&, const JointPolicy&) = default;

 private:
  std::vector<int> counts_;
  int num_states_ = 0;
  std::vector<std::vector<double>> probs_;
};

// Validates a probability row: finite, nonnegative, sums to one.
bool is_distribution(std::span<const double> row, double tolerance = kDistributionTolerance);

}  // namespace mpg
