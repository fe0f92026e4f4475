#pragma once

#include <cstdint>
#include <vector>

#include "mpg/game.hpp"

namespace mpg {

// Every generator is a pure function of its arguments (including the seed)
// and returns a game whose MPG identity holds by construction. Initial
// distributions are uniform, so every state has full support.

/// r_i = phi for every player; phi ~ U[0,1] per (s, a); Dirichlet(1) transition rows.
GameWithPotential make_identical_interest(int num_players, int num_states, const std::vector<int>& action_counts,
                                          double discount, std::uint64_t seed);

/// r_i(s,a) = phi(s,a) + dummy_scale * u_i(s, a_{-i}) with state-only dynamics,
/// so occupancy measures do not depend on the policy.
GameWithPotential make_dummy_term_mpg(int num_players, int num_states, const std::vector<int>& action_counts,
                                      double discount, std::uint64_t seed, double dummy_scale = 1.0);

enum class CostModel {
  kLinearLoad,    // c_f(k) = k
  kRandomAffine,  // c_f(k) = w_f k + b_f, w_f ~ U[0.5, 1.5], b_f ~ U[0, 1]
};

/// Single-state congestion game, gamma = 0. Each action picks a facility,
/// reward is minus that facility's cost at its load, phi is minus the
/// Rosenthal potential.
GameWithPotential make_stateless_congestion(int num_players, int num_facilities, std::uint64_t seed,
                                            CostModel model = CostModel::kLinearLoad);

/// Identical-interest game whose potential is a sum of random unary and
/// pairwise coupling tables, min-max normalized to [0,1] (phi_max = 1).
/// Unlike i.i.d. joint-action potentials, individual incentives do not
/// vanish exponentially in N, which keeps N-scaling sweeps informative.
GameWithPotential make_pairwise_team_game(int num_players, int num_states, const std::vector<int>& action_counts,
                                          double discount, std::uint64_t seed);

}  // namespace mpg
