#include "mpg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mpg/random.hpp"

namespace mpg {

OracleReport make_report(std::string oracle, std::string instance, double main_value, double oracle_value,
                         double tolerance) {
  OracleReport r;
  r.oracle = std::move(oracle);
  r.instance = std::move(instance);
  r.main_value = main_value;
  r.oracle_value = oracle_value;
  r.abs_error = std::abs(main_value - oracle_value);
  r.rel_error = r.abs_error / std::max(std::abs(oracle_value), 1e-300);
  r.tolerance = tolerance;
  r.pass = r.abs_error <= tolerance;
  return r;
}

namespace {

std::size_t checked_power(std::size_t base, int exponent, std::size_t cap, const char* what) {
  std::size_t out = 1;
  for (int k = 0; k < exponent; ++k) {
    if (out > cap / base) {
      std::ostringstream os;
      os << what << ": " << base << "^" << exponent << " deterministic policies exceed the enumeration cap " << cap
         << "; shrink the game or raise the cap";
      throw EnumerationCapExceeded(os.str());
    }
    out *= base;
  }
  return out;
}

}  // namespace

DeterministicPolicies::DeterministicPolicies(const MarkovGame& game, EnumerationScope scope, int player,
                                             std::size_t cap)
    : game_(&game), scope_(scope), player_(player) {
  if (player < 0 || player >= game.num_players()) throw GameError("enumeration: player out of range");
  radix_ = scope == EnumerationScope::kJoint ? game.num_joint_actions()
                                             : static_cast<std::size_t>(game.action_count(player));
  count_ = checked_power(radix_, game.num_states(), cap, "enumerate_deterministic_policies");
}

std::vector<std::size_t> DeterministicPolicies::choices(std::size_t index) const {
  const int S = game_->num_states();
  std::vector<std::size_t> out(S);
  for (int s = S - 1; s >= 0; --s) {
    out[s] = index % radix_;
    index /= radix_;
  }
  return out;
}

JointPolicy DeterministicPolicies::joint_policy(std::size_t index) const {
  if (scope_ != EnumerationScope::kJoint) throw GameError("joint_policy requires joint scope");
  const auto picks = choices(index);
  JointPolicy policy(game_->action_counts(), game_->num_states());
  for (int s = 0; s < game_->num_states(); ++s)
    for (int i = 0; i < game_->num_players(); ++i) policy.row(i, s)[game_->joint().digit(picks[s], i)] = 1.0;
  return policy;
}

JointPolicy DeterministicPolicies::deviate(const JointPolicy& base, std::size_t index) const {
  if (scope_ != EnumerationScope::kPlayer) throw GameError("deviate requires player scope");
  const auto picks = choices(index);
  JointPolicy policy = base;
  for (int s = 0; s < game_->num_states(); ++s) {
    auto row = policy.row(player_, s);
    std::fill(row.begin(), row.end(), 0.0);
    row[picks[s]] = 1.0;
  }
  return policy;
}

std::vector<double> projection_oracle(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0 || n > 12) throw std::invalid_argument("projection_oracle: dimension must be in [1, 12]");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("projection_oracle: non-finite input");

  // On support set T the minimizer is x_j = v_j - theta, theta = (sum_T v - 1)/|T|,
  // and zero elsewhere; keep the feasible candidate closest to v.
  std::vector<double> best, candidate(n);
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) {
        sum += v[j];
        ++size;
      }
    const double theta = (sum - 1.0) / size;
    bool feasible = true;
    for (std::size_t j = 0; j < n; ++j) {
      candidate[j] = (mask & (1u << j)) ? v[j] - theta : 0.0;
      if (candidate[j] < -1e-15) feasible = false;
    }
    if (!feasible) continue;
    double dist = 0.0;
    for (std::size_t j = 0; j < n; ++j) dist += (candidate[j] - v[j]) * (candidate[j] - v[j]);
    if (dist < best_dist) {
      best_dist = dist;
      best = candidate;
    }
  }
  for (double& x : best) x = std::max(x, 0.0);
  return best;
}

int truncation_horizon(double discount, double max_abs_reward, double truncation_error) {
  if (discount == 0.0 || max_abs_reward == 0.0) return 1;
  const double target = truncation_error * (1.0 - discount) / max_abs_reward;
  if (target >= 1.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(target) / std::log(discount))));
}

namespace {

int sample_index(CounterStream& rng, std::span<const double> probs) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  // Rounding can leave acc slightly below 1; fall back to the last positive entry.
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return static_cast<int>(k);
  return 0;
}

}  // namespace

MonteCarloEstimate mc_value_oracle(const MarkovGame& game, const JointPolicy& policy, int player,
                                   std::size_t num_trajectories, double truncation_error, std::uint64_t seed) {
  if (num_trajectories < 2) throw std::invalid_argument("mc_value_oracle: need at least two trajectories");
  double max_abs = 0.0;
  for (double r : game.rewards(player)) max_abs = std::max(max_abs, std::abs(r));
  MonteCarloEstimate est;
  est.horizon = truncation_horizon(game.discount(), max_abs, truncation_error);
  est.truncation_error = std::pow(game.discount(), est.horizon) * max_abs / (1.0 - game.discount());

  const int N = game.num_players();
  std::vector<int> actions(N);
  // Welford running mean and squared deviations.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < num_trajectories; ++k) {
    CounterStream rng(seed, k);
    int s = sample_index(rng, game.initial_dist());
    double ret = 0.0, weight = 1.0;
    for (int t = 0; t < est.horizon; ++t) {
      for (int i = 0; i < N; ++i) actions[i] = sample_index(rng, policy.row(i, s));
      const std::size_t a = game.joint().encode(actions);
      ret += weight * game.reward(player, s, a);
      weight *= game.discount();
      if (t + 1 < est.horizon) s = sample_index(rng, game.transition_row(s, a));
    }
    const double delta = ret - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (ret - mean);
  }
  const auto n = static_cast<double>(num_trajectories);
  est.mean = mean;
  est.standard_error = std::sqrt(m2 / (n - 1.0) / n);
  return est;
}

namespace {

// Solves (I - gamma P_pi) V = r_pi by Gaussian elimination with partial
// pivoting, where P_pi and r_pi are built directly from product weights.
double solve_value(const MarkovGame& game, const JointPolicy& policy, std::span<const double> reward,
                   std::span<const double> mu) {
  const int S = game.num_states();
  const int N = game.num_players();
  const std::size_t A = game.num_joint_actions();
  std::vector<std::vector<double>> M(S, std::vector<double>(S + 1, 0.0));
  std::vector<int> digits(N);
  for (int s = 0; s < S; ++s) {
    M[s][s] = 1.0;
    for (std::size_t a = 0; a < A; ++a) {
      game.joint().decode(a, digits);
      double w = 1.0;
      for (int i = 0; i < N; ++i) w *= policy.prob(i, s, digits[i]);
      if (w == 0.0) continue;
      M[s][S] += w * reward[static_cast<std::size_t>(s) * A + a];
      auto row = game.transition_row(s, a);
      for (int t = 0; t < S; ++t) M[s][t] -= game.discount() * w * row[t];
    }
  }
  for (int c = 0; c < S; ++c) {
    int pivot = c;
    for (int r = c + 1; r < S; ++r)
      if (std::abs(M[r][c]) > std::abs(M[pivot][c])) pivot = r;
    if (M[pivot][c] == 0.0) throw SolverError("oracle_value: singular system");
    std::swap(M[c], M[pivot]);
    for (int r = 0; r < S; ++r) {
      if (r == c) continue;
      const double f = M[r][c] / M[c][c];
      if (f == 0.0) continue;
      for (int k = c; k <= S; ++k) M[r][k] -= f * M[c][k];
    }
  }
  double total = 0.0;
  for (int s = 0; s < S; ++s) total += mu[s] * M[s][S] / M[s][s];
  return total;
}

}  // namespace

double oracle_value(const MarkovGame& game, const JointPolicy& policy, int player, std::span<const double> mu) {
  return solve_value(game, policy, game.rewards(player), mu);
}

double oracle_potential(const MarkovGame& game, std::span<const double> phi, const JointPolicy& policy,
                        std::span<const double> mu) {
  return solve_value(game, policy, phi, mu);
}

namespace {

template <class ValueFn>
double central_difference(const JointPolicy& policy, int player, int s, int a_i, double h, ValueFn&& value) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("fd_gradient_oracle: h must lie in [1e-7, 1e-3]");
  JointPolicy plus = policy, minus = policy;
  plus.row(player, s)[a_i] += h;
  minus.row(player, s)[a_i] -= h;
  return (value(plus) - value(minus)) / (2.0 * h);
}

}  // namespace

double fd_gradient_oracle(const MarkovGame& game, const JointPolicy& policy, int player, int s, int a_i,
                          std::span<const double> mu, double h) {
  return central_difference(policy, player, s, a_i, h,
                            [&](const JointPolicy& p) { return oracle_value(game, p, player, mu); });
}

double fd_potential_gradient_oracle(const MarkovGame& game, std::span<const double> phi, const JointPolicy& policy,
                                    int player, int s, int a_i, std::span<const double> mu, double h) {
  return central_difference(policy, player, s, a_i, h,
                            [&](const JointPolicy& p) { return oracle_potential(game, phi, p, mu); });
}

double enumerated_best_response_value(const MarkovGame& game, const JointPolicy& policy, int player,
                                      std::size_t cap) {
  const DeterministicPolicies deviations(game, EnumerationScope::kPlayer, player, cap);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < deviations.count(); ++k)
    best = std::max(best, oracle_value(game, deviations.deviate(policy, k), player, game.initial_dist()));
  return best;
}

}  // namespace mpg
