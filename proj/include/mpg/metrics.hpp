#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpg/evaluation.hpp"
#include "mpg/game.hpp"
#include "mpg/oracles.hpp"
#include "mpg/pmd.hpp"

namespace mpg {

inline constexpr double kNegativeGapTolerance = 1e-10;
inline constexpr double kArgmaxTolerance = 1e-9;

struct BestResponse {
  std::vector<int> actions;  // deterministic optimal action per state
  double value = 0.0;        // V_i^{pi_i*, pi_-i}(rho)
  double optimality_residual = 0.0;
  int iterations = 0;
};

/// Exact best response of `player` against pi_-i: policy iteration on the
/// induced single-agent MDP (opponent-averaged rewards and transitions).
BestResponse best_response(const MarkovGame& game, const JointPolicy& policy, int player);

struct NashGap {
  std::vector<double> per_player;
  double worst = 0.0;
  int clamped = 0;  // gaps in [-1e-10, 0) set to zero
};

/// gap_i = best-response value - V_i^pi(rho). Gaps below -1e-10 throw
/// SolverError. `bundle`, when given, must be the evaluation of `policy`.
NashGap nash_gap(const MarkovGame& game, const JointPolicy& policy, const EvalBundle* bundle = nullptr);

/// (1/T) sum_t worst gap.
double nash_regret(std::span<const double> worst_gaps);
double nash_regret(const MarkovGame& game, std::span<const JointPolicy> policies);

/// min over players and states of the mass pi_i puts on the argmax set of
/// avgQ_i(s, .) (absolute tolerance 1e-9). One iteration's contribution to c.
double c_contribution(const JointPolicy& policy, const EvalBundle& bundle);
/// Empirical c over a KL trace; re-evaluates every stored policy.
double constant_c(const MarkovGame& game, const PmdTrace& trace);

struct MismatchReport {
  double kappa_rho = 1.0;          // sup_pi ||d_rho^pi / rho||_inf (exact or bound-only)
  double kappa_uniform = 1.0;      // same with the uniform reference distribution
  double kappa_tilde_upper = 1.0;  // min(kappa_rho, |S|), an upper bound on kappa tilde
  bool exact = false;
  std::size_t policies_enumerated = 0;
  std::string method() const { return exact ? "exact-enumeration" : "bound-only"; }
};

/// Brute force over deterministic joint policies when their count is at most
/// `cap`; otherwise the bound-only report (kappa_rho <= max 1/rho, kappa tilde <= |S|).
MismatchReport mismatch_coefficients(const MarkovGame& game, std::size_t cap = kDefaultEnumerationCap);

/// Nash-regret(T) upper bounds. Euclidean: 12 sqrt(2 phi^2 kappa sum|A| / ((1-g)^4 T)).
/// KL: sqrt(12 phi^2 kappa sqrt N / ((1-g)^4 c T)); c is required.
double theorem_bound(Regularizer reg, double phi_max, double kappa, int total_actions, int num_players,
                     double discount, double T, std::optional<double> c = std::nullopt);
double theorem_bound(Regularizer reg, const MarkovGame& game, const PotentialSpec& potential,
                     const MismatchReport& mismatch, double T, std::optional<double> c = std::nullopt);

/// Smallest T the bound certifies for epsilon. Euclidean: 288 phi^2 kappa sum|A| / ((1-g)^4 eps^2).
/// KL: 12 phi^2 kappa sqrt N / ((1-g)^4 c eps^2).
double theorem_iteration_bound(Regularizer reg, double phi_max, double kappa, int total_actions, int num_players,
                               double discount, double epsilon, std::optional<double> c = std::nullopt);

/// Per-iteration metrics of a PMD run, t = 1..T.
struct RegretTrace {
  Regularizer regularizer = Regularizer::kKl;
  double step_size = 0.0;
  int num_players = 0;
  std::vector<std::vector<double>> gaps;  // [t-1][i]
  std::vector<double> worst_gap;
  std::vector<double> running_regret;
  std::vector<double> potential;
  std::vector<double> c_contribution;  // KL only, else empty
  std::vector<double> c_running;       // running min of c_contribution
  std::vector<double> sum_log_z;       // KL: sum_s d^(t+1)(s) sum_i log Z; Euclidean: same with ||dpi||^2
  std::vector<double> improvement_slack;
  int clamped_gaps = 0;

  int length() const { return static_cast<int>(worst_gap.size()); }
  double final_regret() const { return running_regret.empty() ? 0.0 : running_regret.back(); }
  double empirical_c() const { return c_running.empty() ? 1.0 : c_running.back(); }
  // Smallest T with running regret <= epsilon, if any.
  std::optional<int> iterations_to(double epsilon) const;
};

/// Builds a RegretTrace incrementally; usable as a PmdObserver.
class RegretTracker {
 public:
  RegretTracker(const MarkovGame& game, Regularizer reg, double step_size);

  void observe(const IterationRecord& record, const EvalBundle& bundle);
  PmdObserver observer(std::optional<double> stop_at_epsilon = std::nullopt);
  const RegretTrace& trace() const { return trace_; }
  RegretTrace take() { return std::move(trace_); }

 private:
  const MarkovGame* game_;
  RegretTrace trace_;
  double gap_sum_ = 0.0;
};

}  // namespace mpg
