#include "mpg/mpg_check.hpp"

#include <algorithm>
#include <limits>

#include "mpg/evaluation.hpp"

namespace mpg {

double verify_mpg(const MarkovGame& game, const PotentialSpec& potential, std::size_t cap) {
  if (!potential.compatible_with(game)) throw GameError("verify_mpg: potential does not match the game");
  const DeterministicPolicies policies(game, EnumerationScope::kJoint, 0, cap);
  const int N = game.num_players();
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  const std::size_t count = policies.count();

  std::vector<std::vector<double>> deviation_gap(N, std::vector<double>(count));
  for (std::size_t k = 0; k < count; ++k) {
    const auto picks = policies.choices(k);
    const auto values = deterministic_values(game, picks, game.initial_dist(), &potential);
    for (int i = 0; i < N; ++i) deviation_gap[i][k] = values[i] - values[N];
  }

  double residual = 0.0;
  std::vector<double> lo(count), hi(count);
  for (int i = 0; i < N; ++i) {
    std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
    std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < count; ++k) {
      // Opponent profile key: the same policy with player i's digit zeroed in every state.
      const auto picks = policies.choices(k);
      std::size_t key = 0;
      for (int s = 0; s < S; ++s) key = key * A + game.joint().with_action(picks[s], i, 0);
      lo[key] = std::min(lo[key], deviation_gap[i][k]);
      hi[key] = std::max(hi[key], deviation_gap[i][k]);
    }
    for (std::size_t key = 0; key < count; ++key)
      if (hi[key] >= lo[key]) residual = std::max(residual, hi[key] - lo[key]);
  }
  return residual;
}

}  // namespace mpg
