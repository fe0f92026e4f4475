// Acceptance suite: one PASS/FAIL line per criterion on stdout, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fixtures.hpp"
#include "mpg/evaluation.hpp"
#include "mpg/experiment.hpp"
#include "mpg/generators.hpp"
#include "mpg/metrics.hpp"
#include "mpg/mpg_check.hpp"
#include "mpg/oracles.hpp"
#include "mpg/pmd.hpp"
#include "mpg/random.hpp"
#include "mpg/report.hpp"

namespace fs = std::filesystem;
using namespace mpg;
using mpg::testing::random_policy;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

enum class Family { kIdentical, kDummy, kCongestion };

// Seeded instance within the small-game envelope: N <= 3, |S| <= 4,
// |A_i| <= 3 for the Markov families, N <= 6 for congestion.
GameWithPotential draw_game(Family family, std::uint64_t seed, int max_states = 4) {
  std::mt19937_64 rng(splitmix64(seed * 3 + static_cast<std::uint64_t>(family)));
  const double discounts[] = {0.0, 0.5, 0.8, 0.9};
  if (family == Family::kCongestion) {
    const int n = draw(rng, 2, 6);
    const int f = draw(rng, 2, 3);
    return make_stateless_congestion(n, f, seed, seed % 2 ? CostModel::kRandomAffine : CostModel::kLinearLoad);
  }
  const int n = draw(rng, 2, 3);
  const int s = draw(rng, 1, max_states);
  std::vector<int> counts(n);
  for (int& c : counts) c = draw(rng, 2, 3);
  const double g = discounts[draw(rng, 0, 3)];
  if (family == Family::kIdentical) return make_identical_interest(n, s, counts, g, seed);
  return make_dummy_term_mpg(n, s, counts, g, seed, 0.5 + uniform01(rng));
}

Family family_of(int k) { return static_cast<Family>(k % 3); }

std::vector<double> indicator_table(const MarkovGame& game, int state) {
  std::vector<double> phi(game.num_states() * game.num_joint_actions(), 0.0);
  std::fill_n(phi.begin() + static_cast<std::ptrdiff_t>(state * game.num_joint_actions()), game.num_joint_actions(),
              1.0);
  return phi;
}

// d_rho^pi(s) = (1 - gamma) times the value of the reward 1{s' = s}, by the dense oracle solve.
std::vector<double> oracle_occupancy(const MarkovGame& game, const JointPolicy& policy) {
  std::vector<double> d(game.num_states());
  for (int s = 0; s < game.num_states(); ++s)
    d[s] = (1.0 - game.discount()) * oracle_potential(game, indicator_table(game, s), policy, game.initial_dist());
  return d;
}

// kappa_rho by brute force over deterministic joint policies, oracle solves only.
double oracle_kappa_rho(const MarkovGame& game) {
  const DeterministicPolicies all(game, EnumerationScope::kJoint);
  std::vector<std::vector<double>> indicators;
  for (int s = 0; s < game.num_states(); ++s) indicators.push_back(indicator_table(game, s));
  double kappa = 0.0;
  for (std::size_t k = 0; k < all.count(); ++k) {
    const JointPolicy pi = all.joint_policy(k);
    for (int s = 0; s < game.num_states(); ++s) {
      const double d = (1.0 - game.discount()) * oracle_potential(game, indicators[s], pi, game.initial_dist());
      kappa = std::max(kappa, d / game.initial_dist()[s]);
    }
  }
  return kappa;
}

double oracle_phi(const GameWithPotential& gp, const JointPolicy& pi) {
  return oracle_potential(gp.game, gp.potential.table(), pi, gp.game.initial_dist());
}

// ---------------------------------------------------------------------------

Outcome mpg_certification() {
  Stopwatch clock;
  Outcome out;
  double worst = 0.0;
  int games = 0;
  for (int f = 0; f < 3; ++f)
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto gp = draw_game(static_cast<Family>(f), seed);
      const double r = verify_mpg(gp.game, gp.potential);
      worst = std::max(worst, r);
      ++games;
      if (!(r < 1e-10)) out.pass = false;
    }
  // The checker must reject a broken identity.
  double control = std::numeric_limits<double>::infinity();
  for (int f = 0; f < 3; ++f) {
    const auto gp = draw_game(static_cast<Family>(f), 7);
    GameTables t = gp.game.tables();
    t.rewards[0][0] += 0.1;
    control = std::min(control, verify_mpg(MarkovGame::create(std::move(t)), gp.potential));
  }
  const double secs = clock.seconds();
  out.pass = out.pass && control > 1e-3 && secs <= 120.0;
  out.detail = std::to_string(games) + " games, max residual " + sci(worst) + ", perturbed-game residual >= " +
               sci(control) + ", " + sci(secs) + " s";
  return out;
}

Outcome evaluation_identities() {
  Stopwatch clock;
  Outcome out;
  double bellman = 0.0, joint = 0.0, deviation = 0.0, zero_mean = 0.0, value_vs_oracle = 0.0;
  double occupancy_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const auto gp = draw_game(family_of(k), 1000 + k);
    const MarkovGame& game = gp.game;
    std::mt19937_64 rng(splitmix64(5000 + k));
    const JointPolicy a = random_policy(game, rng);
    const JointPolicy b = random_policy(game, rng);
    const EvalBundle bundle = evaluate(game, a, gp.potential);
    bellman = std::max(bellman, bundle.bellman_residual);
    const auto pd = perf_diff_residuals(game, a, b, game.initial_dist(), &gp.potential);
    joint = std::max(joint, pd.joint_form);
    deviation = std::max(deviation, pd.single_deviation);
    for (int i = 0; i < game.num_players(); ++i) {
      value_vs_oracle = std::max(
          value_vs_oracle, std::abs(bundle.value(i, game.initial_dist()) - oracle_value(game, a, i, game.initial_dist())));
      for (int s = 0; s < game.num_states(); ++s) {
        const auto row = a.row(i, s);
        double m = 0.0;
        for (int ai = 0; ai < game.action_count(i); ++ai) m += row[ai] * bundle.avg_adv_at(i, s, ai);
        zero_mean = std::max(zero_mean, std::abs(m));
      }
    }
    for (int s = 0; s < game.num_states(); ++s)
      occupancy_margin =
          std::min(occupancy_margin, bundle.occupancy_rho[s] - (1.0 - game.discount()) * game.initial_dist()[s]);
  }
  const double secs = clock.seconds();
  out.pass = bellman < 1e-10 && joint < 1e-10 && deviation < 1e-10 && zero_mean < 1e-10 && value_vs_oracle < 1e-10 &&
             occupancy_margin >= 0.0 && secs <= 60.0;
  out.detail = "200 instances, bellman " + sci(bellman) + ", perf-diff joint " + sci(joint) + ", single-deviation " +
               sci(deviation) + ", advantage mean " + sci(zero_mean) + ", value vs oracle " + sci(value_vs_oracle) +
               ", min d-(1-g)rho " + sci(occupancy_margin) + ", " + sci(secs) + " s";
  return out;
}

Outcome gradient_identity() {
  Outcome out;
  double fd_error = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto gp = draw_game(family_of(k), 2000 + k);
    const MarkovGame& game = gp.game;
    std::mt19937_64 rng(splitmix64(7000 + k));
    const JointPolicy pi = random_policy(game, rng);
    const int i = draw(rng, 0, game.num_players() - 1);
    const int s = draw(rng, 0, game.num_states() - 1);
    const int a = draw(rng, 0, game.action_count(i) - 1);
    const double main = policy_gradient_entry(game, pi, i, s, a, game.initial_dist());
    const double fd = fd_gradient_oracle(game, pi, i, s, a, game.initial_dist(), 1e-5);
    fd_error = std::max(fd_error, std::abs(main - fd));
  }
  // Identical interest: dV_i = dPhi entrywise. Other MPG families: V_i - Phi
  // does not depend on pi_i, so the difference is constant along each row.
  double identical = 0.0, row_spread = 0.0;
  for (int k = 0; k < 60; ++k) {
    const Family fam = family_of(k);
    const auto gp = draw_game(fam, 3000 + k);
    const MarkovGame& game = gp.game;
    std::mt19937_64 rng(splitmix64(9000 + k));
    const JointPolicy pi = random_policy(game, rng);
    for (int i = 0; i < game.num_players(); ++i)
      for (int s = 0; s < game.num_states(); ++s) {
        double lo = INFINITY, hi = -INFINITY;
        for (int a = 0; a < game.action_count(i); ++a) {
          const double diff = policy_gradient_entry(game, pi, i, s, a, game.initial_dist()) -
                              potential_gradient_entry(game, gp.potential, pi, i, s, a, game.initial_dist());
          if (fam == Family::kIdentical) identical = std::max(identical, std::abs(diff));
          lo = std::min(lo, diff);
          hi = std::max(hi, diff);
        }
        if (fam != Family::kIdentical) row_spread = std::max(row_spread, hi - lo);
      }
  }
  out.pass = fd_error <= 1e-6 && identical <= 1e-8 && row_spread <= 1e-8;
  out.detail = "100 entries vs finite differences max error " + sci(fd_error) + "; identical-interest |dV-dPhi| " +
               sci(identical) + "; other MPGs row spread of dV-dPhi " + sci(row_spread);
  return out;
}

Outcome projection() {
  Outcome out;
  std::mt19937_64 rng(424242);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> v(draw(rng, 2, 8));
    for (double& x : v) x = -3.0 + 6.0 * uniform01(rng);
    const auto p = project_simplex(v);
    const auto q = projection_oracle(v);
    for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(p[j] - q[j]));
  }
  out.pass = worst <= 1e-9;
  out.detail = "1000 vectors, max deviation from support enumeration " + sci(worst);
  return out;
}

// Runs shared by the improvement and regret-bound criteria: 20 games, both
// regularizers at the theorem step, T = 200, seeded interior starts.
struct RunCheck {
  double worst_slack = INFINITY;       // improvement slack recomputed from oracle quantities
  double worst_record_slack = INFINITY;  // slack stored by the run
  double worst_monotone = INFINITY;      // min Phi(t+1) - Phi(t)
  double worst_bound_margin = INFINITY;  // min bound(T) - regret(T)
  double worst_gap_mismatch = 0.0;       // tracker gaps vs enumerated best responses
  double worst_kappa_mismatch = 0.0;
  bool ok_improvement = false;
  bool ok_bound = false;
};

RunCheck check_runs(Regularizer reg) {
  RunCheck rc;
  rc.ok_bound = true;
  for (int k = 0; k < 20; ++k) {
    const auto gp = draw_game(family_of(k), 4000 + k, 3);
    const MarkovGame& game = gp.game;
    const double g = game.discount();
    const double phi = gp.potential.phi_max();
    std::mt19937_64 rng(splitmix64(11000 + k));
    PmdConfig config;
    config.regularizer = reg;
    config.num_iterations = 200;
    config.initial_policy = random_policy(game, rng);
    const double eta = theorem_step_size(reg, game, gp.potential);
    RegretTracker tracker(game, reg, eta);
    const PmdTrace trace = run_pmd(game, gp.potential, config, tracker.observer());
    const RegretTrace& regret = tracker.trace();

    const int T = static_cast<int>(trace.records.size());
    std::vector<double> potential(T + 1);
    for (int t = 0; t < T; ++t) potential[t] = oracle_phi(gp, trace.records[t].policy);
    potential[T] = oracle_phi(gp, trace.final_policy);

    const int sum_a = game.total_actions();
    double gap_sum = 0.0;
    std::vector<double> running(T);
    for (int t = 0; t < T; ++t) {
      const JointPolicy& now = trace.records[t].policy;
      const JointPolicy& next = t + 1 < T ? trace.records[t + 1].policy : trace.final_policy;
      const auto d_next = oracle_occupancy(game, next);
      double weighted = 0.0;
      if (reg == Regularizer::kEuclidean) {
        for (int s = 0; s < game.num_states(); ++s)
          for (int i = 0; i < game.num_players(); ++i) {
            double sq = 0.0;
            for (int a = 0; a < game.action_count(i); ++a)
              sq += (next.prob(i, s, a) - now.prob(i, s, a)) * (next.prob(i, s, a) - now.prob(i, s, a));
            weighted += d_next[s] * sq;
          }
        weighted *= 1.0 / (2.0 * eta * (1.0 - g)) - phi * sum_a / ((1.0 - g) * (1.0 - g));
      } else {
        const EvalBundle bundle = evaluate(game, now);
        for (int s = 0; s < game.num_states(); ++s)
          for (int i = 0; i < game.num_players(); ++i) {
            double z = 0.0;
            for (int a = 0; a < game.action_count(i); ++a) z += now.prob(i, s, a) * std::exp(eta * bundle.avg_adv_at(i, s, a));
            weighted += d_next[s] * std::log(z);
          }
        weighted /= (1.0 - g) * eta;
      }
      const double diff = potential[t + 1] - potential[t];
      rc.worst_slack = std::min(rc.worst_slack, diff - weighted);
      rc.worst_record_slack = std::min(rc.worst_record_slack, trace.records[t].improvement_slack);
      rc.worst_monotone = std::min(rc.worst_monotone, diff);

      double worst_gap = 0.0;
      for (int i = 0; i < game.num_players(); ++i) {
        const double gap =
            enumerated_best_response_value(game, now, i) - oracle_value(game, now, i, game.initial_dist());
        rc.worst_gap_mismatch = std::max(rc.worst_gap_mismatch, std::abs(gap - regret.gaps[t][i]));
        worst_gap = std::max(worst_gap, gap);
      }
      gap_sum += worst_gap;
      running[t] = gap_sum / (t + 1);
    }

    const MismatchReport mismatch = mismatch_coefficients(game);
    const double kappa_rho = oracle_kappa_rho(game);
    rc.worst_kappa_mismatch = std::max(rc.worst_kappa_mismatch, std::abs(kappa_rho - mismatch.kappa_rho));
    const double kappa = std::min(kappa_rho, static_cast<double>(game.num_states()));
    const double scale = std::pow(1.0 - g, 4);
    const double c = regret.empirical_c();
    for (int t = 0; t < T; ++t) {
      const double n = t + 1;
      const double bound =
          reg == Regularizer::kEuclidean
              ? 12.0 * std::sqrt(2.0 * phi * phi * kappa * sum_a / (scale * n))
              : std::sqrt(12.0 * phi * phi * kappa * std::sqrt(static_cast<double>(game.num_players())) / (scale * c * n));
      rc.worst_bound_margin = std::min(rc.worst_bound_margin, bound - running[t]);
      if (running[t] > bound) rc.ok_bound = false;
    }
  }
  rc.ok_improvement = rc.worst_slack >= -1e-9 && rc.worst_record_slack >= -1e-9 && rc.worst_monotone >= -1e-12;
  return rc;
}

Outcome improvement(const RunCheck& rc, const char* name) {
  Outcome out;
  out.pass = rc.ok_improvement;
  out.detail = std::string("20 ") + name + " runs x 200 steps, min slack " + sci(rc.worst_slack) + " (run's own " +
               sci(rc.worst_record_slack) + "), min potential increment " + sci(rc.worst_monotone);
  return out;
}

Outcome regret_bounds(const RunCheck& euclid, const RunCheck& kl) {
  Outcome out;
  const double gaps = std::max(euclid.worst_gap_mismatch, kl.worst_gap_mismatch);
  const double kappa = std::max(euclid.worst_kappa_mismatch, kl.worst_kappa_mismatch);
  out.pass = euclid.ok_bound && kl.ok_bound && gaps < 1e-9 && kappa < 1e-9;
  out.detail = "40 runs, min bound - regret: euclidean " + sci(euclid.worst_bound_margin) + ", kl " +
               sci(kl.worst_bound_margin) + "; gaps vs enumeration " + sci(gaps) + "; kappa vs brute force " + sci(kappa);
  return out;
}

const std::string& cell_of(const Table& t, const std::vector<std::string>& row, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw std::runtime_error("missing column " + name);
  return row[static_cast<std::size_t>(it - t.header.begin())];
}

double column(const Table& t, const std::vector<std::string>& row, const std::string& name) {
  return std::stod(cell_of(t, row, name));
}

struct SweepData {
  std::vector<CellResult> cells;
  Table summary;
  double seconds = 0.0;
};

Outcome scaling(SweepData& sweep) {
  Outcome out;
  Stopwatch clock;
  const ExperimentConfig config = load_config(fs::path(MPG_SOURCE_DIR) / "configs" / "scaling_sweep.json");
  for (const auto& cell : expand_cells(config, false)) sweep.cells.push_back(run_cell(cell));
  sweep.summary = scaling_summary(sweep.cells);
  sweep.seconds = clock.seconds();

  // Closed forms recomputed here from the cell's game data.
  double formula_error = 0.0;
  bool certified = true;
  for (const auto& c : sweep.cells) {
    certified = certified && c.all_pass();
    const double eps = c.spec.epsilons.front();
    const double scale = std::pow(1.0 - c.discount, 4) * eps * eps;
    const double kappa = c.mismatch.kappa_tilde_upper;
    const double expect = c.spec.algorithm.regularizer == Regularizer::kEuclidean
                              ? 288.0 * c.phi_max * c.phi_max * kappa * c.total_actions / scale
                              : 12.0 * c.phi_max * c.phi_max * kappa * std::sqrt(double(c.num_players)) / scale;
    formula_error = std::max(formula_error, std::abs(c.iteration_bound_c_free.front() / expect - 1.0));
  }

  std::map<std::pair<std::string, int>, const std::vector<std::string>*> row;
  for (const auto& r : sweep.summary.rows) row[{r[0], std::stoi(r[1])}] = &r;
  auto get = [&](const std::string& alg, int n, const std::string& col) { return column(sweep.summary, *row.at({alg, n}), col); };
  const double euclid_ratio =
      get("euclidean", 16, "theorem_iteration_bound_c_free") / get("euclidean", 4, "theorem_iteration_bound_c_free");
  const double kl_ratio = get("kl", 16, "theorem_iteration_bound_c_free") / get("kl", 4, "theorem_iteration_bound_c_free");
  bool reached = true, within = true;
  for (const auto& r : sweep.summary.rows) {
    reached = reached && std::isfinite(column(sweep.summary, r, "max_iterations_to_eps"));
    within = within && cell_of(sweep.summary, r, "empirical_within_bound") == "true";
  }
  const double euclid_growth = get("euclidean", 16, "iterations_to_eps") / get("euclidean", 2, "iterations_to_eps");
  const double kl_growth = get("kl", 16, "iterations_to_eps") / get("kl", 2, "iterations_to_eps");

  out.pass = euclid_ratio == 4.0 && kl_ratio == 2.0 && formula_error < 1e-12 && reached && within && certified &&
             kl_growth <= euclid_growth && sweep.seconds <= 600.0;
  out.detail = std::to_string(sweep.cells.size()) + " cells; bound ratio N16/N4 euclidean " + format_number(euclid_ratio) +
               ", kl " + format_number(kl_ratio) + "; median iterations growth N2->N16 euclidean " + sci(euclid_growth) +
               ", kl " + sci(kl_growth) + (reached ? "" : "; target not reached everywhere") +
               (within ? "" : "; empirical above bound") + (certified ? "" : "; certification failed") + ", " +
               sci(sweep.seconds) + " s";
  return out;
}

Outcome kl_fixed_point() {
  Outcome out;
  const auto gp = mpg::testing::coordination_game(0.5);
  const MarkovGame& game = gp.game;
  JointPolicy init(game.action_counts(), 1);
  for (int i = 0; i < 2; ++i) {
    init.row(i, 0)[0] = 0.6;
    init.row(i, 0)[1] = 0.4;
  }
  PmdConfig config;
  config.regularizer = Regularizer::kKl;
  config.num_iterations = 5000;
  config.initial_policy = init;
  const PmdTrace trace = run_pmd(game, gp.potential, config);
  const JointPolicy& pi = trace.final_policy;
  const EvalBundle bundle = evaluate(game, pi);
  double worst = 0.0, oracle_worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    // Single state: avgQ = (1 - gamma) dV/dpi, read off the finite-difference oracle.
    std::vector<double> q(2);
    for (int a = 0; a < 2; ++a)
      q[a] = (1.0 - game.discount()) * fd_gradient_oracle(game, pi, i, 0, a, game.initial_dist(), 1e-5);
    const double v = pi.prob(i, 0, 0) * q[0] + pi.prob(i, 0, 1) * q[1];
    for (int a = 0; a < 2; ++a) {
      worst = std::max(worst, std::min(pi.prob(i, 0, a), std::abs(bundle.avg_adv_at(i, 0, a))));
      oracle_worst = std::max(oracle_worst, std::min(pi.prob(i, 0, a), std::abs(q[a] - v)));
    }
  }
  out.pass = worst < 1e-6 && oracle_worst < 1e-6 && pi.prob(0, 0, 0) > 0.5;
  out.detail = "T=5000 from (0.6, 0.4): max min(pi, |A|) " + sci(worst) + ", with oracle advantages " + sci(oracle_worst) +
               ", pi_0(a=0) " + format_number(pi.prob(0, 0, 0));
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> csv_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      out[fs::relative(e.path(), dir).string()] = sha256_hex(read_file(e.path()));
  return out;
}

std::string cell_digest(const CellResult& c) {
  return sha256_hex(to_csv(c.trace_table) + to_csv(summary_table(std::span(&c, 1))) +
                    to_csv(certification_table(std::span(&c, 1))));
}

Outcome reproducibility(const SweepData& sweep) {
  Outcome out;
  int compared = 0, differing = 0;
  // Library path: a Markov config run twice.
  const ExperimentConfig config = load_config(fs::path(MPG_SOURCE_DIR) / "configs" / "markov_both.json");
  for (const auto& cell : expand_cells(config, false)) {
    ++compared;
    if (cell_digest(run_cell(cell)) != cell_digest(run_cell(cell))) ++differing;
  }
  // Sweep cells rerun against the first pass.
  for (const auto& c : sweep.cells)
    if (c.num_players == 4 && c.spec.seed == 0) {
      ++compared;
      if (cell_digest(run_cell(c.spec)) != cell_digest(c)) ++differing;
    }
  // CLI path: two runs into separate directories.
  const fs::path base = fs::temp_directory_path() / ("mpg_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  int cli_status = 0;
  std::map<std::string, std::string> first, second;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = base / std::to_string(rep);
    const std::string cmd = std::string("\"") + MPG_EXPERIMENT_BIN + "\" run \"" + MPG_SOURCE_DIR +
                            "/configs/congestion_kl.json\" --seed 3 --out \"" + dir.string() + "\" 2>/dev/null";
    cli_status |= std::system(cmd.c_str());
    (rep ? second : first) = csv_hashes(dir);
  }
  fs::remove_all(base);
  compared += static_cast<int>(first.size());
  for (const auto& [name, h] : first)
    if (!second.count(name) || second[name] != h) ++differing;
  out.pass = differing == 0 && cli_status == 0 && !first.empty() && first.size() == second.size();
  out.detail = std::to_string(compared) + " artifacts hashed twice, " + std::to_string(differing) + " differ" +
               (cli_status ? ", CLI run failed" : "");
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int k, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "mpg_certification", mpg_certification);
  report(2, "evaluation_identities", evaluation_identities);
  report(3, "gradient_identity", gradient_identity);
  report(4, "simplex_projection", projection);
  RunCheck euclid, kl;
  report(5, "euclidean_improvement", [&] {
    euclid = check_runs(Regularizer::kEuclidean);
    return improvement(euclid, "euclidean");
  });
  report(6, "kl_improvement", [&] {
    kl = check_runs(Regularizer::kKl);
    return improvement(kl, "kl");
  });
  report(7, "regret_below_bounds", [&] { return regret_bounds(euclid, kl); });
  SweepData sweep;
  report(8, "n_scaling", [&] { return scaling(sweep); });
  report(9, "kl_fixed_point", kl_fixed_point);
  report(10, "reproducibility", [&] { return reproducibility(sweep); });
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria pass")) << std::endl;
  return failures ? 1 : 0;
}
