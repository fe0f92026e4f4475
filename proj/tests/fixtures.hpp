#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mpg/game.hpp"
#include "mpg/random.hpp"

namespace mpg::testing {

// Single-state 2x2 coordination game: r = 1 on matching actions, else 0.
inline GameWithPotential coordination_game(double discount = 0.0) {
  GameTables t;
  t.num_players = 2;
  t.num_states = 1;
  t.action_counts = {2, 2};
  t.discount = discount;
  t.initial_dist = {1.0};
  t.transition.assign(4, 1.0);
  const std::vector<double> r = {1.0, 0.0, 0.0, 1.0};
  t.rewards = {r, r};
  return {MarkovGame::create(std::move(t)), PotentialSpec(r, 1, 4)};
}

// Two states swapping deterministically regardless of actions, one player
// action each, zero rewards.
inline MarkovGame two_state_cycle(double discount) {
  GameTables t;
  t.num_players = 2;
  t.num_states = 2;
  t.action_counts = {1, 1};
  t.discount = discount;
  t.initial_dist = {0.5, 0.5};
  t.transition = {0.0, 1.0, 1.0, 0.0};
  t.rewards = {{0.0, 0.0}, {0.0, 0.0}};
  return MarkovGame::create(std::move(t));
}

// Interior random policy with Dirichlet(1) rows bounded away from zero.
inline JointPolicy random_policy(const MarkovGame& game, std::mt19937_64& rng) {
  JointPolicy p(game.action_counts(), game.num_states());
  for (int i = 0; i < game.num_players(); ++i)
    for (int s = 0; s < game.num_states(); ++s) {
      auto row = p.row(i, s);
      double sum = 0.0;
      for (double& x : row) {
        x = -std::log1p(-uniform01(rng)) + 1e-3;
        sum += x;
      }
      for (double& x : row) x /= sum;
    }
  return p;
}

inline std::vector<int> random_counts(std::mt19937_64& rng, int num_players, int max_actions) {
  std::vector<int> out(num_players);
  for (int& c : out) c = 1 + static_cast<int>(uniform01(rng) * max_actions);
  return out;
}

}  // namespace mpg::testing
