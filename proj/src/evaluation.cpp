#include "mpg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "joint_weights.hpp"

namespace mpg {
namespace {

using detail::JointWeights;

void check_inputs(const MarkovGame& game, const JointPolicy& policy, EvalOptions options) {
  if (!policy.matches(game)) throw GameError("policy dimensions do not match the game");
  if (options.probe) {
    for (int i = 0; i < policy.num_players(); ++i)
      for (double p : policy.player_table(i))
        if (!std::isfinite(p)) throw GameError("probe policy has non-finite entries");
  } else {
    policy.validate();
  }
}

void check_mu(const MarkovGame& game, std::span<const double> mu) {
  if (static_cast<int>(mu.size()) != game.num_states()) throw GameError("mu has wrong length");
  if (!is_distribution(mu)) throw GameError("mu is not a distribution");
}

// Joint action probabilities per state, [s][a].
std::vector<double> joint_probabilities(const MarkovGame& game, const JointPolicy& policy) {
  const std::size_t A = game.num_joint_actions();
  std::vector<double> w(static_cast<std::size_t>(game.num_states()) * A);
  for (int s = 0; s < game.num_states(); ++s) {
    JointWeights it(game.joint(), policy, s);
    for (std::size_t a = 0; a < A; ++a, it.advance()) w[s * A + a] = it.joint();
  }
  return w;
}

Eigen::MatrixXd policy_transition(const MarkovGame& game, std::span<const double> joint_w) {
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double w = joint_w[s * A + a];
      if (w == 0.0) continue;
      auto row = game.transition_row(s, a);
      for (int t = 0; t < S; ++t) P(s, t) += w * row[t];
    }
  }
  return P;
}

std::vector<double> occupancy_from(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, double discount,
                                   std::span<const double> mu, bool normalize = true) {
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  // P M = L U, so M^T x = b is U^T w = b, L^T z = w, x = P^T z.
  const Eigen::MatrixXd& LU = lu.matrixLU();
  Eigen::VectorXd w = LU.triangularView<Eigen::Upper>().transpose().solve(rhs);
  Eigen::VectorXd z = LU.triangularView<Eigen::UnitLower>().transpose().solve(w);
  Eigen::VectorXd d = (1.0 - discount) * (lu.permutationP().transpose() * z);
  std::vector<double> out(d.data(), d.data() + d.size());
  if (!normalize) return out;
  double sum = 0.0;
  for (double x : out) sum += x;
  if (sum > 0.0)
    for (double& x : out) x /= sum;
  return out;
}

}  // namespace

double EvalBundle::value(int i, std::span<const double> mu) const {
  double total = 0.0;
  for (int s = 0; s < num_states_; ++s) total += mu[s] * v_values[i][s];
  return total;
}

std::vector<double> EvalBundle::occupancy(std::span<const double> mu) const {
  if (static_cast<int>(mu.size()) != num_states_) throw GameError("mu has wrong length");
  return occupancy_from(*system_, discount_, mu, !probe_);
}

double EvalBundle::total_potential(std::span<const double> mu) const {
  if (!potential_v) throw GameError("bundle was evaluated without a potential");
  double total = 0.0;
  for (int s = 0; s < num_states_; ++s) total += mu[s] * (*potential_v)[s];
  return total;
}

EvalBundle evaluate_impl(const MarkovGame& game, const JointPolicy& policy, const PotentialSpec* potential,
                         EvalOptions options) {
  check_inputs(game, policy, options);
  if (potential && !potential->compatible_with(game)) throw GameError("potential does not match the game");

  const int N = game.num_players();
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  const double gamma = game.discount();
  const int columns = N + (potential ? 1 : 0);

  std::vector<const double*> reward(columns);
  for (int i = 0; i < N; ++i) reward[i] = game.rewards(i).data();
  if (potential) reward[N] = potential->table().data();

  // Pass 1: joint probabilities, P_pi and the expected one-step rewards.
  std::vector<double> joint_w(static_cast<std::size_t>(S) * A);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(S, columns);
  for (int s = 0; s < S; ++s) {
    JointWeights it(game.joint(), policy, s);
    for (std::size_t a = 0; a < A; ++a, it.advance()) {
      const std::size_t sa = s * A + a;
      const double w = joint_w[sa] = it.joint();
      if (w == 0.0) continue;
      auto row = game.transition_row(s, a);
      for (int t = 0; t < S; ++t) P(s, t) += w * row[t];
      for (int k = 0; k < columns; ++k) R(s, k) += w * reward[k][sa];
    }
  }

  auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>(Eigen::MatrixXd::Identity(S, S) - gamma * P);
  const Eigen::MatrixXd V = lu->solve(R);
  if (!V.allFinite()) throw SolverError("policy evaluation produced non-finite values");

  EvalBundle out;
  out.num_states_ = S;
  out.num_joint_ = A;
  out.counts_ = game.action_counts();
  out.discount_ = gamma;
  out.probe_ = options.probe;

  // Pass 2: Q(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) V(s'), averaged over
  // opponents as it is produced: avgQ_i(s,a_i) = sum_{a_-i} pi_-i(a_-i|s) Q_i(s,a_i,a_-i).
  // The averaged potential Q uses the same weights per player.
  const bool keep_q = options.joint_q;
  std::vector<std::vector<double>> Q(columns);
  if (keep_q)
    for (auto& q : Q) q.resize(static_cast<std::size_t>(S) * A);
  std::vector<std::vector<double>> avg(N), avg_phi(potential ? N : 0);
  out.avg_reward.resize(N);
  out.avg_transition.resize(N);
  for (int i = 0; i < N; ++i) {
    const std::size_t rows = static_cast<std::size_t>(S) * game.action_count(i);
    avg[i].assign(rows, 0.0);
    if (potential) avg_phi[i].assign(rows, 0.0);
    out.avg_reward[i].assign(rows, 0.0);
    out.avg_transition[i].assign(rows * S, 0.0);
  }
  // V recomputed from Q, for the Bellman residual.
  Eigen::MatrixXd v_from_q = Eigen::MatrixXd::Zero(S, columns);
  std::vector<double> qa(columns);
  for (int s = 0; s < S; ++s) {
    JointWeights it(game.joint(), policy, s);
    for (std::size_t a = 0; a < A; ++a, it.advance()) {
      const std::size_t sa = s * A + a;
      auto row = game.transition_row(s, a);
      for (int k = 0; k < columns; ++k) {
        double next = 0.0;
        for (int t = 0; t < S; ++t) next += row[t] * V(t, k);
        qa[k] = reward[k][sa] + gamma * next;
        if (keep_q) Q[k][sa] = qa[k];
        v_from_q(s, k) += joint_w[sa] * qa[k];
      }
      const auto& d = it.digits();
      for (int i = 0; i < N; ++i) {
        const double w = it.excluding(i);
        if (w == 0.0) continue;
        const std::size_t idx = static_cast<std::size_t>(s) * game.action_count(i) + d[i];
        avg[i][idx] += w * qa[i];
        if (potential) avg_phi[i][idx] += w * qa[N];
        out.avg_reward[i][idx] += w * reward[i][sa];
        double* p = out.avg_transition[i].data() + idx * S;
        for (int t = 0; t < S; ++t) p[t] += w * row[t];
      }
    }
  }

  out.v_values.resize(N);
  out.avg_adv.resize(N);
  for (int i = 0; i < N; ++i) {
    out.v_values[i].resize(S);
    for (int s = 0; s < S; ++s) out.v_values[i][s] = V(s, i);
    out.avg_adv[i].resize(avg[i].size());
    for (int s = 0; s < S; ++s)
      for (int ai = 0; ai < game.action_count(i); ++ai) {
        const std::size_t idx = static_cast<std::size_t>(s) * game.action_count(i) + ai;
        out.avg_adv[i][idx] = avg[i][idx] - V(s, i);
      }
  }

  // Bellman residual: Q - r - gamma P (pi . Q).
  const bool want_residual = keep_q && options.bellman_residual;
  double residual = want_residual ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (int s = 0; s < S && want_residual; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t sa = s * A + a;
      auto row = game.transition_row(s, a);
      for (int k = 0; k < columns; ++k) {
        double next = 0.0;
        for (int t = 0; t < S; ++t) next += row[t] * v_from_q(t, k);
        residual = std::max(residual, std::abs(Q[k][sa] - reward[k][sa] - gamma * next));
      }
    }
  out.bellman_residual = residual;

  if (potential) {
    if (keep_q) out.potential_q = std::move(Q[N]);
    out.potential_v = std::vector<double>(S);
    for (int s = 0; s < S; ++s) (*out.potential_v)[s] = V(s, N);
    out.potential_avg_q = std::move(avg_phi);
  }
  Q.resize(keep_q ? N : 0);
  out.q_values = std::move(Q);
  out.avg_q = std::move(avg);
  out.system_ = std::move(lu);
  out.occupancy_rho = out.occupancy(game.initial_dist());
  return out;
}

EvalBundle evaluate(const MarkovGame& game, const JointPolicy& policy, EvalOptions options) {
  return evaluate_impl(game, policy, nullptr, options);
}

EvalBundle evaluate(const MarkovGame& game, const JointPolicy& policy, const PotentialSpec& potential,
                    EvalOptions options) {
  return evaluate_impl(game, policy, &potential, options);
}

std::vector<double> occupancy_measure(const MarkovGame& game, const JointPolicy& policy, std::span<const double> mu) {
  check_inputs(game, policy, {});
  check_mu(game, mu);
  const Eigen::MatrixXd P = policy_transition(game, joint_probabilities(game, policy));
  const int S = game.num_states();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(S, S) - game.discount() * P);
  return occupancy_from(lu, game.discount(), mu);
}

double total_potential(const MarkovGame& game, const PotentialSpec& potential, const JointPolicy& policy,
                       std::span<const double> mu) {
  check_mu(game, mu);
  return evaluate(game, policy, potential).total_potential(mu);
}

double policy_gradient_entry(const MarkovGame& game, const JointPolicy& policy, int player, int s, int a_i,
                             std::span<const double> mu) {
  if (player < 0 || player >= game.num_players() || s < 0 || s >= game.num_states() || a_i < 0 ||
      a_i >= game.action_count(player))
    throw GameError("policy_gradient_entry: index out of range");
  const EvalBundle bundle = evaluate(game, policy, EvalOptions{.probe = true});
  const auto d = bundle.occupancy(mu);
  return d[s] * bundle.avg_q_at(player, s, a_i) / (1.0 - game.discount());
}

double potential_gradient_entry(const MarkovGame& game, const PotentialSpec& potential, const JointPolicy& policy,
                                int player, int s, int a_i, std::span<const double> mu) {
  if (player < 0 || player >= game.num_players() || s < 0 || s >= game.num_states() || a_i < 0 ||
      a_i >= game.action_count(player))
    throw GameError("potential_gradient_entry: index out of range");
  const EvalBundle bundle = evaluate(game, policy, potential, EvalOptions{.probe = true});
  const auto d = bundle.occupancy(mu);
  const double avg = (*bundle.potential_avg_q)[player][static_cast<std::size_t>(s) * game.action_count(player) + a_i];
  return d[s] * avg / (1.0 - game.discount());
}

double PerfDiffResiduals::max() const { return std::max({joint_form, single_deviation, potential_joint}); }

PerfDiffResiduals perf_diff_residuals(const MarkovGame& game, const JointPolicy& policy_a,
                                      const JointPolicy& policy_b, std::span<const double> mu,
                                      const PotentialSpec* potential) {
  check_mu(game, mu);
  const int N = game.num_players();
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  const double scale = 1.0 / (1.0 - game.discount());

  const EvalBundle ea = potential ? evaluate(game, policy_a, *potential) : evaluate(game, policy_a);
  const EvalBundle eb = potential ? evaluate(game, policy_b, *potential) : evaluate(game, policy_b);
  const auto d_b = eb.occupancy(mu);
  const auto wa = joint_probabilities(game, policy_a);
  const auto wb = joint_probabilities(game, policy_b);

  PerfDiffResiduals out;
  auto joint_rhs = [&](auto&& q_of) {
    double rhs = 0.0;
    for (int s = 0; s < S; ++s) {
      double inner = 0.0;
      for (std::size_t a = 0; a < A; ++a) inner += (wb[s * A + a] - wa[s * A + a]) * q_of(s, a);
      rhs += d_b[s] * inner;
    }
    return scale * rhs;
  };

  for (int i = 0; i < N; ++i) {
    const double lhs = eb.value(i, mu) - ea.value(i, mu);
    const double rhs = joint_rhs([&](int s, std::size_t a) { return ea.q(i, s, a); });
    out.joint_form = std::max(out.joint_form, std::abs(lhs - rhs));
  }
  if (potential) {
    const double lhs = eb.total_potential(mu) - ea.total_potential(mu);
    const double rhs = joint_rhs([&](int s, std::size_t a) { return ea.potential_q_at(s, a); });
    out.potential_joint = std::abs(lhs - rhs);
  }

  // Player i deviates from a to b's row while the others stay at a.
  for (int i = 0; i < N; ++i) {
    JointPolicy deviated = policy_a;
    for (int s = 0; s < S; ++s) {
      auto src = policy_b.row(i, s);
      std::copy(src.begin(), src.end(), deviated.row(i, s).begin());
    }
    const EvalBundle ed = evaluate(game, deviated);
    const auto d_dev = ed.occupancy(mu);
    const double lhs = ed.value(i, mu) - ea.value(i, mu);
    double rhs = 0.0;
    for (int s = 0; s < S; ++s) {
      double inner = 0.0;
      for (int ai = 0; ai < game.action_count(i); ++ai)
        inner += (policy_b.prob(i, s, ai) - policy_a.prob(i, s, ai)) * ea.avg_q_at(i, s, ai);
      rhs += d_dev[s] * inner;
    }
    out.single_deviation = std::max(out.single_deviation, std::abs(lhs - scale * rhs));
  }
  return out;
}

double perf_diff_check(const MarkovGame& game, const JointPolicy& policy_a, const JointPolicy& policy_b,
                       std::span<const double> mu) {
  return perf_diff_residuals(game, policy_a, policy_b, mu).max();
}

double policy_increment_residual(const MarkovGame& game, const JointPolicy& from, const JointPolicy& to) {
  const int N = game.num_players();
  const std::size_t A = game.num_joint_actions();
  std::vector<int> digits(N);
  double residual = 0.0;
  for (int s = 0; s < game.num_states(); ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      game.joint().decode(a, digits);
      double telescoped = 0.0;
      for (int i = 0; i < N; ++i) {
        // prod_{j<=i} to_j prod_{j>i} from_j - prod_{j<i} to_j prod_{j>=i} from_j
        double upper = 1.0, lower = 1.0;
        for (int j = 0; j < N; ++j) {
          upper *= (j <= i ? to : from).prob(j, s, digits[j]);
          lower *= (j < i ? to : from).prob(j, s, digits[j]);
        }
        telescoped += upper - lower;
      }
      const double direct = to.joint_prob(game.joint(), s, a) - from.joint_prob(game.joint(), s, a);
      residual = std::max(residual, std::abs(direct - telescoped));
    }
  }
  return residual;
}

namespace {

using detail::JointWeights;

Eigen::PartialPivLU<Eigen::MatrixXd> deterministic_system(const MarkovGame& game,
                                                          std::span<const std::size_t> joint_action_per_state) {
  const int S = game.num_states();
  if (static_cast<int>(joint_action_per_state.size()) != S) throw GameError("need one joint action per state");
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
  for (int s = 0; s < S; ++s) {
    auto row = game.transition_row(s, joint_action_per_state[s]);
    for (int t = 0; t < S; ++t) M(s, t) -= game.discount() * row[t];
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(M);
}

}  // namespace

std::vector<double> deterministic_values(const MarkovGame& game, std::span<const std::size_t> joint_action_per_state,
                                         std::span<const double> mu, const PotentialSpec* potential) {
  const int N = game.num_players();
  const int S = game.num_states();
  const int columns = N + (potential ? 1 : 0);
  const auto lu = deterministic_system(game, joint_action_per_state);
  Eigen::MatrixXd R(S, columns);
  for (int s = 0; s < S; ++s) {
    const std::size_t a = joint_action_per_state[s];
    for (int i = 0; i < N; ++i) R(s, i) = game.reward(i, s, a);
    if (potential) R(s, N) = potential->phi(s, a);
  }
  const Eigen::MatrixXd V = lu.solve(R);
  std::vector<double> out(columns, 0.0);
  for (int k = 0; k < columns; ++k)
    for (int s = 0; s < S; ++s) out[k] += mu[s] * V(s, k);
  return out;
}

std::vector<double> deterministic_occupancy(const MarkovGame& game, std::span<const std::size_t> joint_action_per_state,
                                            std::span<const double> mu) {
  return occupancy_from(deterministic_system(game, joint_action_per_state), game.discount(), mu);
}

}  // namespace mpg
