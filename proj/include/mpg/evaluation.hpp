#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mpg/game.hpp"

namespace mpg {

struct EvalOptions {
  // Accept arbitrary finite row weights (the multilinear extension of the
  // policy table). Only meant for finite-difference probing.
  bool probe = false;
  // Keep the joint-action Q tables (q_values, potential_q). Without them the
  // Bellman residual is not computed either.
  bool joint_q = true;
  // Compute the Bellman residual diagnostic (one extra pass over joint actions).
  bool bellman_residual = true;
};

/// Exact evaluation artifacts for one joint policy.
///
/// Tables are flattened: q_values[i] is [s][joint_a], avg_q[i] and avg_adv[i]
/// are [s][a_i], v_values[i] is [s]. q_values and potential_q are empty when
/// evaluated with joint_q off.
class EvalBundle {
 public:
  int num_players() const { return static_cast<int>(v_values.size()); }
  int num_states() const { return num_states_; }

  double q(int i, int s, std::size_t a) const { return q_values[i][static_cast<std::size_t>(s) * num_joint_ + a]; }
  double v(int i, int s) const { return v_values[i][s]; }
  double avg_q_at(int i, int s, int a_i) const { return avg_q[i][static_cast<std::size_t>(s) * counts_[i] + a_i]; }
  double avg_adv_at(int i, int s, int a_i) const { return avg_adv[i][static_cast<std::size_t>(s) * counts_[i] + a_i]; }
  std::span<const double> avg_q_row(int i, int s) const {
    return {avg_q[i].data() + static_cast<std::size_t>(s) * counts_[i], static_cast<std::size_t>(counts_[i])};
  }
  std::span<const double> avg_adv_row(int i, int s) const {
    return {avg_adv[i].data() + static_cast<std::size_t>(s) * counts_[i], static_cast<std::size_t>(counts_[i])};
  }

  // V_i(mu) = sum_s mu(s) V_i(s).
  double value(int i, std::span<const double> mu) const;
  // d_mu for any initial distribution, from the stored factorization.
  std::vector<double> occupancy(std::span<const double> mu) const;

  bool has_potential() const { return potential_v.has_value(); }
  double potential_q_at(int s, std::size_t a) const { return (*potential_q)[static_cast<std::size_t>(s) * num_joint_ + a]; }
  // Phi(mu) = sum_s mu(s) V_phi(s).
  double total_potential(std::span<const double> mu) const;

  std::vector<std::vector<double>> q_values;
  std::vector<std::vector<double>> v_values;
  std::vector<std::vector<double>> avg_q;
  std::vector<std::vector<double>> avg_adv;
  std::vector<double> occupancy_rho;
  std::optional<std::vector<double>> potential_q;
  std::optional<std::vector<double>> potential_v;
  // Averaged potential Q, [i][s][a_i]; present with the potential.
  std::optional<std::vector<std::vector<double>>> potential_avg_q;
  // Player i's MDP with pi_-i frozen: opponent-averaged reward [s][a_i] and
  // transition [s][a_i][s'].
  std::vector<std::vector<double>> avg_reward;
  std::vector<std::vector<double>> avg_transition;
  double bellman_residual = 0.0;  // NaN when not requested

 private:
  friend EvalBundle evaluate_impl(const MarkovGame&, const JointPolicy&, const PotentialSpec*, EvalOptions);

  int num_states_ = 0;
  std::size_t num_joint_ = 0;
  std::vector<int> counts_;
  double discount_ = 0.0;
  bool probe_ = false;
  std::shared_ptr<const Eigen::PartialPivLU<Eigen::MatrixXd>> system_;
};

EvalBundle evaluate(const MarkovGame& game, const JointPolicy& policy, EvalOptions options = {});
EvalBundle evaluate(const MarkovGame& game, const JointPolicy& policy, const PotentialSpec& potential,
                    EvalOptions options = {});

/// d_mu^pi solving d = (1 - gamma) mu + gamma P_pi^T d.
std::vector<double> occupancy_measure(const MarkovGame& game, const JointPolicy& policy, std::span<const double> mu);

/// Phi^pi(mu); |Phi| <= phi_max / (1 - gamma).
double total_potential(const MarkovGame& game, const PotentialSpec& potential, const JointPolicy& policy,
                       std::span<const double> mu);

/// dV_i(mu)/dpi_i(a_i|s) = d_mu(s) avgQ_i(s, a_i) / (1 - gamma), for the
/// multilinear extension of the policy table (probe rows allowed).
double policy_gradient_entry(const MarkovGame& game, const JointPolicy& policy, int player, int s, int a_i,
                             std::span<const double> mu);
/// Same for Phi, using the averaged potential Q.
double potential_gradient_entry(const MarkovGame& game, const PotentialSpec& potential, const JointPolicy& policy,
                                int player, int s, int a_i, std::span<const double> mu);

struct PerfDiffResiduals {
  double joint_form = 0.0;         // per player, joint game as that player's MDP
  double single_deviation = 0.0;   // multi-agent lemma, one player deviates to b
  double potential_joint = 0.0;    // joint form with r = phi (when potential given)
  double max() const;
};

/// Residuals of the performance-difference identities between policy_a (pi)
/// and policy_b (pi').
PerfDiffResiduals perf_diff_residuals(const MarkovGame& game, const JointPolicy& policy_a,
                                      const JointPolicy& policy_b, std::span<const double> mu,
                                      const PotentialSpec* potential = nullptr);
double perf_diff_check(const MarkovGame& game, const JointPolicy& policy_a, const JointPolicy& policy_b,
                       std::span<const double> mu);

/// Max over (s, a) of the telescoping policy-increment decomposition error.
double policy_increment_residual(const MarkovGame& game, const JointPolicy& from, const JointPolicy& to);

/// Values at mu for a deterministic joint policy given as one joint action per
/// state: entries 0..N-1 are V_i(mu), entry N is Phi(mu) if a potential is given.
std::vector<double> deterministic_values(const MarkovGame& game, std::span<const std::size_t> joint_action_per_state,
                                         std::span<const double> mu, const PotentialSpec* potential = nullptr);
std::vector<double> deterministic_occupancy(const MarkovGame& game, std::span<const std::size_t> joint_action_per_state,
                                            std::span<const double> mu);

}  // namespace mpg
