#include "mpg/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mpg/random.hpp"

namespace mpg {
namespace {

void check_sizes(int num_players, int num_states, const std::vector<int>& action_counts) {
  if (num_players < 2) throw GameError("generator: num_players must be >= 2");
  if (num_states < 1) throw GameError("generator: num_states must be >= 1");
  if (static_cast<int>(action_counts.size()) != num_players)
    throw GameError("generator: action_counts size != num_players");
  for (int c : action_counts)
    if (c < 1) throw GameError("generator: action counts must be >= 1");
}

// Normalized exponential draws: a Dirichlet(1, ..., 1) sample.
void dirichlet_row(std::mt19937_64& rng, std::span<double> out) {
  double sum = 0.0;
  for (double& x : out) {
    x = -std::log1p(-uniform01(rng)) + 1e-12;
    sum += x;
  }
  for (double& x : out) x /= sum;
}

GameTables base_tables(int num_players, int num_states, const std::vector<int>& action_counts, double discount) {
  GameTables t;
  t.num_players = num_players;
  t.num_states = num_states;
  t.action_counts = action_counts;
  t.discount = discount;
  t.initial_dist.assign(num_states, 1.0 / num_states);
  return t;
}

std::size_t joint_size(const std::vector<int>& counts) { return JointActionSpace(counts).size(); }

}  // namespace

GameWithPotential make_identical_interest(int num_players, int num_states, const std::vector<int>& action_counts,
                                          double discount, std::uint64_t seed) {
  check_sizes(num_players, num_states, action_counts);
  std::mt19937_64 rng(seed);
  const std::size_t A = joint_size(action_counts);
  const auto S = static_cast<std::size_t>(num_states);

  GameTables t = base_tables(num_players, num_states, action_counts, discount);
  std::vector<double> phi(S * A);
  for (double& x : phi) x = uniform01(rng);
  t.transition.resize(S * A * S);
  for (std::size_t row = 0; row < S * A; ++row) dirichlet_row(rng, {t.transition.data() + row * S, S});
  t.rewards.assign(num_players, phi);

  PotentialSpec potential(std::move(phi), S, A);
  return {MarkovGame::create(std::move(t)), std::move(potential)};
}

GameWithPotential make_dummy_term_mpg(int num_players, int num_states, const std::vector<int>& action_counts,
                                      double discount, std::uint64_t seed, double dummy_scale) {
  check_sizes(num_players, num_states, action_counts);
  std::mt19937_64 rng(seed);
  const JointActionSpace space(action_counts);
  const std::size_t A = space.size();
  const auto S = static_cast<std::size_t>(num_states);

  GameTables t = base_tables(num_players, num_states, action_counts, discount);
  std::vector<double> phi(S * A);
  for (double& x : phi) x = uniform01(rng);

  t.transition.resize(S * A * S);
  std::vector<double> state_row(S);
  for (std::size_t s = 0; s < S; ++s) {
    dirichlet_row(rng, state_row);
    for (std::size_t a = 0; a < A; ++a) std::copy(state_row.begin(), state_row.end(), t.transition.begin() + (s * A + a) * S);
  }

  // u_i(s, a_{-i}) is drawn once per opponent profile, keyed by the joint
  // index with player i's digit set to zero.
  t.rewards.assign(num_players, phi);
  for (int i = 0; i < num_players; ++i) {
    std::vector<double> dummy(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        if (space.digit(a, i) == 0) dummy[s * A + a] = uniform01(rng);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        t.rewards[i][s * A + a] += dummy_scale * dummy[s * A + space.with_action(a, i, 0)];
  }

  PotentialSpec potential(std::move(phi), S, A);
  return {MarkovGame::create(std::move(t)), std::move(potential)};
}

GameWithPotential make_stateless_congestion(int num_players, int num_facilities, std::uint64_t seed, CostModel model) {
  if (num_facilities < 1) throw GameError("generator: num_facilities must be >= 1");
  const std::vector<int> counts(num_players, num_facilities);
  check_sizes(num_players, 1, counts);

  std::vector<double> slope(num_facilities, 1.0), offset(num_facilities, 0.0);
  if (model == CostModel::kRandomAffine) {
    std::mt19937_64 rng(seed);
    for (int f = 0; f < num_facilities; ++f) {
      slope[f] = 0.5 + uniform01(rng);
      offset[f] = uniform01(rng);
    }
  }
  auto cost = [&](int f, int load) { return slope[f] * load + offset[f]; };

  const JointActionSpace space(counts);
  const std::size_t A = space.size();
  GameTables t = base_tables(num_players, 1, counts, 0.0);
  t.transition.assign(A, 1.0);
  t.rewards.assign(num_players, std::vector<double>(A, 0.0));
  std::vector<double> phi(A, 0.0);
  std::vector<int> actions(num_players), load(num_facilities);
  for (std::size_t a = 0; a < A; ++a) {
    space.decode(a, actions);
    std::fill(load.begin(), load.end(), 0);
    for (int f : actions) ++load[f];
    for (int i = 0; i < num_players; ++i) t.rewards[i][a] = -cost(actions[i], load[actions[i]]);
    double rosenthal = 0.0;
    for (int f = 0; f < num_facilities; ++f)
      for (int k = 1; k <= load[f]; ++k) rosenthal += cost(f, k);
    phi[a] = -rosenthal;
  }

  PotentialSpec potential(std::move(phi), 1, A);
  return {MarkovGame::create(std::move(t)), std::move(potential)};
}

GameWithPotential make_pairwise_team_game(int num_players, int num_states, const std::vector<int>& action_counts,
                                          double discount, std::uint64_t seed) {
  check_sizes(num_players, num_states, action_counts);
  std::mt19937_64 rng(seed);
  const JointActionSpace space(action_counts);
  const std::size_t A = space.size();
  const auto S = static_cast<std::size_t>(num_states);
  const int N = num_players;

  // unary[s][i][a_i], pairwise[s][i][j][a_i][a_j] for ordered i != j.
  std::vector<std::vector<std::vector<double>>> unary(S, std::vector<std::vector<double>>(N));
  std::vector<std::vector<std::vector<double>>> pairwise(S, std::vector<std::vector<double>>(N * N));
  for (std::size_t s = 0; s < S; ++s) {
    for (int i = 0; i < N; ++i) {
      unary[s][i].resize(action_counts[i]);
      for (double& x : unary[s][i]) x = uniform01(rng);
    }
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        if (i == j) continue;
        auto& table = pairwise[s][i * N + j];
        table.resize(static_cast<std::size_t>(action_counts[i]) * action_counts[j]);
        for (double& x : table) x = uniform01(rng);
      }
  }

  std::vector<double> phi(S * A);
  std::vector<int> actions(N);
  const double unary_weight = 1.0 / (2.0 * N);
  const double pair_weight = 1.0 / (2.0 * N * (N - 1));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      space.decode(a, actions);
      double value = 0.0;
      for (int i = 0; i < N; ++i) {
        value += unary_weight * unary[s][i][actions[i]];
        for (int j = 0; j < N; ++j)
          if (j != i) value += pair_weight * pairwise[s][i * N + j][actions[i] * action_counts[j] + actions[j]];
      }
      phi[s * A + a] = value;
    }
  }
  const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
  const double low = *lo, range = *hi - *lo;
  if (range > 0.0) {
    for (double& x : phi) x = (x - low) / range;
  } else {
    std::fill(phi.begin(), phi.end(), 1.0);
  }

  GameTables t = base_tables(num_players, num_states, action_counts, discount);
  t.transition.resize(S * A * S);
  for (std::size_t row = 0; row < S * A; ++row) dirichlet_row(rng, {t.transition.data() + row * S, S});
  t.rewards.assign(num_players, phi);

  PotentialSpec potential(std::move(phi), S, A);
  return {MarkovGame::create(std::move(t)), std::move(potential)};
}

}  // namespace mpg
