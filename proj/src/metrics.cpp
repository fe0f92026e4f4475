#include "mpg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "joint_weights.hpp"

namespace mpg {

namespace {

// Player i's MDP with pi_-i frozen: r[s][k] and P[s][k][s'] averaged over
// opponents' actions.
struct InducedMdp {
  int num_actions = 0;
  std::vector<double> r;
  std::vector<double> P;
};

// One pass over joint actions builds the induced MDP of every requested player.
std::vector<InducedMdp> induced_mdps(const MarkovGame& game, const JointPolicy& policy, int only_player = -1) {
  const int N = game.num_players();
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  std::vector<InducedMdp> out(N);
  for (int i = 0; i < N; ++i) {
    if (only_player >= 0 && i != only_player) continue;
    out[i].num_actions = game.action_count(i);
    out[i].r.assign(static_cast<std::size_t>(S) * out[i].num_actions, 0.0);
    out[i].P.assign(static_cast<std::size_t>(S) * out[i].num_actions * S, 0.0);
  }
  const int lo = only_player >= 0 ? only_player : 0;
  const int hi = only_player >= 0 ? only_player + 1 : N;
  std::vector<const double*> reward(N);
  for (int i = lo; i < hi; ++i) reward[i] = game.rewards(i).data();
  for (int s = 0; s < S; ++s) {
    detail::JointWeights it(game.joint(), policy, s);
    for (std::size_t a = 0; a < A; ++a, it.advance()) {
      const std::size_t sa = s * A + a;
      auto row = game.transition_row(s, a);
      const auto& d = it.digits();
      for (int i = lo; i < hi; ++i) {
        const double w = it.excluding(i);
        if (w == 0.0) continue;
        const std::size_t sk = static_cast<std::size_t>(s) * out[i].num_actions + d[i];
        out[i].r[sk] += w * reward[i][sa];
        double* p = out[i].P.data() + sk * S;
        for (int t = 0; t < S; ++t) p[t] += w * row[t];
      }
    }
  }
  return out;
}

BestResponse solve_induced(const MarkovGame& game, const InducedMdp& mdp) {
  const int S = game.num_states();
  const int K = mdp.num_actions;
  const double gamma = game.discount();
  const auto& r = mdp.r;
  const auto& P = mdp.P;

  auto q_of = [&](const Eigen::VectorXd& V, int s, int k) {
    const std::size_t sk = static_cast<std::size_t>(s) * K + k;
    double next = 0.0;
    for (int t = 0; t < S; ++t) next += P[sk * S + t] * V(t);
    return r[sk] + gamma * next;
  };

  BestResponse out;
  out.actions.assign(S, 0);
  for (int s = 0; s < S; ++s)
    for (int k = 1; k < K; ++k)
      if (r[static_cast<std::size_t>(s) * K + k] > r[static_cast<std::size_t>(s) * K + out.actions[s]]) out.actions[s] = k;

  Eigen::VectorXd V(S);
  for (;;) {
    ++out.iterations;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd rhs(S);
    for (int s = 0; s < S; ++s) {
      const std::size_t sk = static_cast<std::size_t>(s) * K + out.actions[s];
      rhs(s) = r[sk];
      for (int t = 0; t < S; ++t) M(s, t) -= gamma * P[sk * S + t];
    }
    V = M.partialPivLu().solve(rhs);
    // Switch only on strict improvement (lowest index among ties), so the loop terminates.
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      int best = out.actions[s];
      double best_q = q_of(V, s, best);
      for (int k = 0; k < K; ++k) {
        const double q = q_of(V, s, k);
        if (q > best_q + 1e-13 * std::max(1.0, std::abs(best_q))) {
          best = k;
          best_q = q;
        }
      }
      if (best != out.actions[s]) {
        out.actions[s] = best;
        changed = true;
      }
    }
    if (!changed) break;
    if (out.iterations > 10000) throw SolverError("best_response: policy iteration failed to terminate");
  }

  for (int s = 0; s < S; ++s) {
    double best_q = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) best_q = std::max(best_q, q_of(V, s, k));
    out.optimality_residual = std::max(out.optimality_residual, std::abs(best_q - V(s)));
  }
  const auto rho = game.initial_dist();
  for (int s = 0; s < S; ++s) out.value += rho[s] * V(s);
  return out;
}

}  // namespace

BestResponse best_response(const MarkovGame& game, const JointPolicy& policy, int player) {
  if (player < 0 || player >= game.num_players()) throw GameError("best_response: player out of range");
  if (!policy.matches(game)) throw GameError("best_response: policy does not match the game");
  return solve_induced(game, induced_mdps(game, policy, player)[player]);
}

NashGap nash_gap(const MarkovGame& game, const JointPolicy& policy, const EvalBundle* bundle) {
  std::optional<EvalBundle> own;
  if (!bundle) {
    own = evaluate(game, policy);
    bundle = &*own;
  }
  // The bundle already carries every player's induced MDP.
  std::vector<InducedMdp> mdps(game.num_players());
  for (int i = 0; i < game.num_players(); ++i)
    mdps[i] = {game.action_count(i), bundle->avg_reward[i], bundle->avg_transition[i]};
  NashGap out;
  out.per_player.resize(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    double gap = solve_induced(game, mdps[i]).value - bundle->value(i, game.initial_dist());
    if (gap < -kNegativeGapTolerance)
      throw SolverError("nash_gap: gap " + std::to_string(gap) + " for player " + std::to_string(i) +
                        " is below -1e-10; best response or evaluation is inconsistent");
    if (gap < 0.0) {
      gap = 0.0;
      ++out.clamped;
    }
    out.per_player[i] = gap;
    out.worst = std::max(out.worst, gap);
  }
  return out;
}

double nash_regret(std::span<const double> worst_gaps) {
  if (worst_gaps.empty()) throw std::invalid_argument("nash_regret: empty trace");
  double sum = 0.0;
  for (double g : worst_gaps) sum += g;
  return sum / static_cast<double>(worst_gaps.size());
}

double nash_regret(const MarkovGame& game, std::span<const JointPolicy> policies) {
  std::vector<double> worst;
  worst.reserve(policies.size());
  for (const auto& p : policies) worst.push_back(nash_gap(game, p).worst);
  return nash_regret(worst);
}

double c_contribution(const JointPolicy& policy, const EvalBundle& bundle) {
  double c = 1.0;
  for (int i = 0; i < policy.num_players(); ++i)
    for (int s = 0; s < policy.num_states(); ++s) {
      const auto q = bundle.avg_q_row(i, s);
      const double top = *std::max_element(q.begin(), q.end());
      double mass = 0.0;
      for (std::size_t a = 0; a < q.size(); ++a)
        if (q[a] >= top - kArgmaxTolerance) mass += policy.prob(i, s, static_cast<int>(a));
      c = std::min(c, mass);
    }
  return c;
}

double constant_c(const MarkovGame& game, const PmdTrace& trace) {
  if (trace.records.empty()) throw std::invalid_argument("constant_c: empty trace");
  double c = 1.0;
  for (const auto& rec : trace.records) c = std::min(c, c_contribution(rec.policy, evaluate(game, rec.policy)));
  return c;
}

MismatchReport mismatch_coefficients(const MarkovGame& game, std::size_t cap) {
  const int S = game.num_states();
  const auto rho = game.initial_dist();
  MismatchReport out;
  std::size_t count = 0;
  try {
    count = DeterministicPolicies(game, EnumerationScope::kJoint, 0, cap).count();
  } catch (const EnumerationCapExceeded&) {
    double inv = 0.0;
    for (double p : rho) inv = std::max(inv, 1.0 / p);
    out.kappa_rho = inv;
    out.kappa_uniform = S;
    out.kappa_tilde_upper = std::min(out.kappa_rho, static_cast<double>(S));
    return out;
  }

  const DeterministicPolicies policies(game, EnumerationScope::kJoint, 0, cap);
  double kappa_rho = 0.0, max_d = 0.0;
  const bool fixed_dynamics = game.action_independent_dynamics();
  for (std::size_t k = 0; k < count; ++k) {
    const auto d = deterministic_occupancy(game, policies.choices(k), rho);
    for (int s = 0; s < S; ++s) {
      kappa_rho = std::max(kappa_rho, d[s] / rho[s]);
      max_d = std::max(max_d, d[s]);
    }
    ++out.policies_enumerated;
    if (fixed_dynamics) break;  // every policy has the same occupancy
  }
  out.exact = true;
  out.kappa_rho = kappa_rho;
  out.kappa_uniform = S * max_d;
  out.kappa_tilde_upper = std::min(kappa_rho, static_cast<double>(S));
  return out;
}

namespace {

void check_bound_args(Regularizer reg, double T, std::optional<double> c) {
  if (!(T >= 1.0)) throw std::invalid_argument("theorem bound: T must be >= 1");
  if (reg == Regularizer::kKl && (!c || !(*c > 0.0)))
    throw std::invalid_argument("theorem bound: KL requires c > 0");
}

}  // namespace

double theorem_bound(Regularizer reg, double phi_max, double kappa, int total_actions, int num_players,
                     double discount, double T, std::optional<double> c) {
  check_bound_args(reg, T, c);
  const double g4 = std::pow(1.0 - discount, 4);
  const double phi2 = phi_max * phi_max;
  if (reg == Regularizer::kEuclidean) return 12.0 * std::sqrt(2.0 * phi2 * kappa * total_actions / (g4 * T));
  return std::sqrt(12.0 * phi2 * kappa * std::sqrt(static_cast<double>(num_players)) / (g4 * *c * T));
}

double theorem_bound(Regularizer reg, const MarkovGame& game, const PotentialSpec& potential,
                     const MismatchReport& mismatch, double T, std::optional<double> c) {
  return theorem_bound(reg, potential.phi_max(), mismatch.kappa_tilde_upper, game.total_actions(), game.num_players(),
                       game.discount(), T, c);
}

double theorem_iteration_bound(Regularizer reg, double phi_max, double kappa, int total_actions, int num_players,
                               double discount, double epsilon, std::optional<double> c) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("theorem_iteration_bound: epsilon must be positive");
  check_bound_args(reg, 1.0, c);
  const double g4 = std::pow(1.0 - discount, 4);
  const double phi2 = phi_max * phi_max;
  if (reg == Regularizer::kEuclidean) return 288.0 * phi2 * kappa * total_actions / (g4 * epsilon * epsilon);
  return 12.0 * phi2 * kappa * std::sqrt(static_cast<double>(num_players)) / (g4 * *c * epsilon * epsilon);
}

std::optional<int> RegretTrace::iterations_to(double epsilon) const {
  for (std::size_t t = 0; t < running_regret.size(); ++t)
    if (running_regret[t] <= epsilon) return static_cast<int>(t + 1);
  return std::nullopt;
}

RegretTracker::RegretTracker(const MarkovGame& game, Regularizer reg, double step_size) : game_(&game) {
  trace_.regularizer = reg;
  trace_.step_size = step_size;
  trace_.num_players = game.num_players();
}

void RegretTracker::observe(const IterationRecord& record, const EvalBundle& bundle) {
  const NashGap gap = nash_gap(*game_, record.policy, &bundle);
  trace_.gaps.push_back(gap.per_player);
  trace_.worst_gap.push_back(gap.worst);
  trace_.clamped_gaps += gap.clamped;
  gap_sum_ += gap.worst;
  trace_.running_regret.push_back(gap_sum_ / static_cast<double>(trace_.worst_gap.size()));
  trace_.potential.push_back(record.potential);
  trace_.sum_log_z.push_back(record.weighted_term);
  trace_.improvement_slack.push_back(record.improvement_slack);
  if (trace_.regularizer == Regularizer::kKl) {
    const double c = c_contribution(record.policy, bundle);
    trace_.c_contribution.push_back(c);
    trace_.c_running.push_back(trace_.c_running.empty() ? c : std::min(trace_.c_running.back(), c));
  }
}

PmdObserver RegretTracker::observer(std::optional<double> stop_at_epsilon) {
  return [this, stop_at_epsilon](const IterationRecord& record, const EvalBundle& bundle) {
    observe(record, bundle);
    return !(stop_at_epsilon && trace_.running_regret.back() <= *stop_at_epsilon);
  };
}

}  // namespace mpg
