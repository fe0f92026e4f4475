#include "mpg/pmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mpg {

std::string_view to_string(Regularizer reg) { return reg == Regularizer::kEuclidean ? "euclidean" : "kl"; }

Regularizer parse_regularizer(std::string_view name) {
  if (name == "euclidean") return Regularizer::kEuclidean;
  if (name == "kl") return Regularizer::kKl;
  throw std::invalid_argument("unknown regularizer '" + std::string(name) + "' (expected euclidean or kl)");
}

double theorem_step_size(Regularizer reg, double discount, double phi_max, int num_players, int total_actions) {
  if (!(phi_max > 0.0)) throw GameError("theorem_step_size: phi_max = 0, the game is degenerate");
  if (reg == Regularizer::kEuclidean) return (1.0 - discount) / (4.0 * phi_max * total_actions);
  return (1.0 - discount) / (2.0 * phi_max * std::sqrt(static_cast<double>(num_players)));
}

double theorem_step_size(Regularizer reg, const MarkovGame& game, const PotentialSpec& potential) {
  return theorem_step_size(reg, game.discount(), potential.phi_max(), game.num_players(), game.total_actions());
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("project_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite entry");

  std::vector<double> u(v.begin(), v.end());
  std::stable_sort(u.begin(), u.end(), std::greater<>());
  double prefix = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    prefix += u[j];
    const double candidate = (prefix - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::max(v[j] - theta, 0.0);
  return out;
}

double euclidean_row_update(std::span<double> row, std::span<const double> q, double eta) {
  if (row.size() == 1) return 0.0;
  std::vector<double> shifted(row.size());
  for (std::size_t a = 0; a < row.size(); ++a) shifted[a] = row[a] + eta * q[a];
  const auto next = project_simplex(shifted);
  double sq = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) {
    sq += (next[a] - row[a]) * (next[a] - row[a]);
    row[a] = next[a];
  }
  return sq;
}

double log_normalizer(std::span<const double> row, std::span<const double> x, double eta) {
  double max_exponent = -INFINITY;
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] > 0.0) max_exponent = std::max(max_exponent, std::abs(eta * x[a]));
  if (max_exponent <= 1.0) {
    // Small exponents: log1p/expm1 keep full relative precision of log Z near 0.
    double acc = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a] > 0.0) acc += row[a] * std::expm1(eta * x[a]);
    return std::log1p(acc);
  }
  double m = -INFINITY;
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] > 0.0) m = std::max(m, std::log(row[a]) + eta * x[a]);
  double sum = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] > 0.0) sum += std::exp(std::log(row[a]) + eta * x[a] - m);
  return m + std::log(sum);
}

double kl_row_update(std::span<double> row, std::span<const double> x, double eta) {
  const double log_z = log_normalizer(row, x, eta);
  if (row.size() == 1) return log_z;
  std::vector<double> logits(row.size(), -INFINITY);
  double m = -INFINITY;
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] > 0.0) {
      logits[a] = std::log(row[a]) + eta * x[a];
      m = std::max(m, logits[a]);
    }
  double sum = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] > 0.0) sum += std::exp(logits[a] - m);
  for (std::size_t a = 0; a < row.size(); ++a) row[a] = row[a] > 0.0 ? std::exp(logits[a] - m) / sum : 0.0;
  return log_z;
}

StepResult pmd_step(const MarkovGame& game, const JointPolicy& policy, const EvalBundle& bundle, Regularizer reg,
                    double eta, bool advantage_form) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("pmd_step: step size must be positive");
  const int N = game.num_players();
  const int S = game.num_states();
  StepResult out{policy, std::vector<std::vector<double>>(N, std::vector<double>(S, 0.0)),
                 std::vector<std::vector<double>>(N, std::vector<double>(S, 0.0))};
  for (int i = 0; i < N; ++i) {
    for (int s = 0; s < S; ++s) {
      auto row = out.policy.row(i, s);
      const auto old = policy.row(i, s);
      if (reg == Regularizer::kEuclidean) {
        out.sq_displacement[i][s] = euclidean_row_update(row, bundle.avg_q_row(i, s), eta);
        continue;
      }
      // The advantage-scale normalizer is recorded for both forms.
      const auto adv = bundle.avg_adv_row(i, s);
      out.log_z[i][s] = log_normalizer(old, adv, eta);
      if (row.size() > 1) kl_row_update(row, advantage_form ? adv : bundle.avg_q_row(i, s), eta);
      double sq = 0.0;
      for (std::size_t a = 0; a < row.size(); ++a) sq += (row[a] - old[a]) * (row[a] - old[a]);
      out.sq_displacement[i][s] = sq;
    }
  }
  return out;
}

double occupancy_weighted_sum(std::span<const double> occupancy, const std::vector<std::vector<double>>& per_player) {
  double total = 0.0;
  for (std::size_t s = 0; s < occupancy.size(); ++s) {
    double inner = 0.0;
    for (const auto& player : per_player) inner += player[s];
    total += occupancy[s] * inner;
  }
  return total;
}

double euclidean_improvement_bound(const MarkovGame& game, const PotentialSpec& potential, double eta,
                                   std::span<const double> next_occupancy,
                                   const std::vector<std::vector<double>>& sq_displacement) {
  const double g = game.discount();
  const double coefficient =
      1.0 / (2.0 * eta * (1.0 - g)) - potential.phi_max() * game.total_actions() / ((1.0 - g) * (1.0 - g));
  return coefficient * occupancy_weighted_sum(next_occupancy, sq_displacement);
}

double kl_improvement_bound(const MarkovGame& game, double eta, std::span<const double> next_occupancy,
                            const std::vector<std::vector<double>>& log_z) {
  const double eta_adv = (1.0 - game.discount()) * eta;
  return occupancy_weighted_sum(next_occupancy, log_z) / eta_adv;
}

double kl_improvement_step_limit(const MarkovGame& game, const PotentialSpec& potential) {
  const double g = game.discount();
  return (1.0 - g) * (1.0 - g) / (potential.phi_max() * std::sqrt(static_cast<double>(game.num_players())));
}

PmdTrace run_pmd(const MarkovGame& game, const PotentialSpec& potential, const PmdConfig& config,
                 const PmdObserver& observer) {
  if (config.num_iterations < 1) throw std::invalid_argument("run_pmd: num_iterations must be >= 1");
  if (config.step_size && !(*config.step_size > 0.0)) throw std::invalid_argument("run_pmd: step size must be positive");
  PmdTrace trace;
  trace.regularizer = config.regularizer;
  trace.advantage_form = config.advantage_form;
  trace.step_size = config.step_size ? *config.step_size : theorem_step_size(config.regularizer, game, potential);
  trace.advantage_step_size = (1.0 - game.discount()) * trace.step_size;

  JointPolicy policy = config.initial_policy ? *config.initial_policy : JointPolicy::uniform(game);
  if (!policy.matches(game)) throw GameError("run_pmd: initial policy does not match the game");
  policy.validate();
  if (config.regularizer == Regularizer::kKl && !policy.strictly_positive())
    throw GameError("run_pmd: KL requires an interior initial policy");

  trace.records.reserve(config.num_iterations);
  EvalOptions eval_options;
  eval_options.joint_q = false;
  EvalBundle bundle = evaluate(game, policy, potential, eval_options);
  for (int t = 1; t <= config.num_iterations; ++t) {
    StepResult step = pmd_step(game, policy, bundle, config.regularizer, trace.step_size, config.advantage_form);
    EvalBundle next = evaluate(game, step.policy, potential, eval_options);

    IterationRecord rec;
    rec.t = t;
    rec.potential = bundle.total_potential(game.initial_dist());
    rec.potential_next = next.total_potential(game.initial_dist());
    rec.improvement_bound =
        config.regularizer == Regularizer::kEuclidean
            ? euclidean_improvement_bound(game, potential, trace.step_size, next.occupancy_rho, step.sq_displacement)
            : kl_improvement_bound(game, trace.step_size, next.occupancy_rho, step.log_z);
    rec.weighted_term = occupancy_weighted_sum(
        next.occupancy_rho, config.regularizer == Regularizer::kEuclidean ? step.sq_displacement : step.log_z);
    rec.improvement_slack = (rec.potential_next - rec.potential) - rec.improvement_bound;
    rec.log_z = std::move(step.log_z);
    rec.sq_displacement = std::move(step.sq_displacement);
    rec.policy = std::move(policy);

    const bool keep_going = !observer || observer(rec, bundle);
    trace.records.push_back(std::move(rec));
    policy = std::move(step.policy);
    bundle = std::move(next);
    if (!keep_going) break;
  }
  trace.final_policy = std::move(policy);
  return trace;
}

}  // namespace mpg
