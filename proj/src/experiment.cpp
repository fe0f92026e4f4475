#include "mpg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mpg/game_io.hpp"
#include "mpg/mpg_check.hpp"
#include "mpg/random.hpp"

namespace mpg {

using nlohmann::json;

namespace {

constexpr double kMpgTolerance = 1e-10;
constexpr double kSlackTolerance = 1e-9;
constexpr double kMonotoneTolerance = 1e-12;
constexpr double kPrefixTolerance = 1e-12;
constexpr double kBestResponseTolerance = 1e-9;
constexpr double kGradientTolerance = 1e-6;
constexpr double kProjectionTolerance = 1e-9;

// Reads one JSON object and rejects keys that were never asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(raw(key), key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) fail("missing required key '" + key + "'");
    return convert<T>(raw(key), key);
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    std::vector<T> out;
    if (!v.is_array()) {
      out.push_back(convert<T>(v, key));
      return out;
    }
    for (const auto& x : v) out.push_back(convert<T>(x, key));
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail("unknown key '" + item.key() + "'");
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError("config " + where_ + ": " + message); }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, json>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail("'" + key + "' must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail("'" + key + "' must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
      if (std::is_unsigned_v<T> && v.get<long long>() < 0) fail("'" + key + "' must be nonnegative");
      return v.get<T>();
    } else {
      if (!v.is_number()) fail("'" + key + "' must be a number");
      return v.get<T>();
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

GameFamily parse_family(const std::string& name) {
  if (name == "identical_interest") return GameFamily::kIdenticalInterest;
  if (name == "dummy_term") return GameFamily::kDummyTerm;
  if (name == "congestion") return GameFamily::kCongestion;
  if (name == "pairwise_team") return GameFamily::kPairwiseTeam;
  if (name == "file") return GameFamily::kFile;
  throw ConfigError("config game: unknown family '" + name +
                    "' (identical_interest, dummy_term, congestion, pairwise_team, file)");
}

std::string_view cost_model_name(CostModel model) {
  return model == CostModel::kLinearLoad ? "linear_load" : "random_affine";
}

GameSource parse_game_source(const json& j, const std::filesystem::path& base_dir) {
  Fields f(j, "game");
  GameSource g;
  g.family = parse_family(f.require<std::string>("family"));
  switch (g.family) {
    case GameFamily::kFile: {
      std::filesystem::path p = f.require<std::string>("path");
      g.path = p.is_absolute() ? p : base_dir / p;
      break;
    }
    case GameFamily::kCongestion: {
      g.num_players = f.get<int>("num_players", 2);
      g.num_facilities = f.get<int>("num_facilities", 2);
      const auto model = f.get<std::string>("cost_model", "linear_load");
      if (model == "linear_load") g.cost_model = CostModel::kLinearLoad;
      else if (model == "random_affine") g.cost_model = CostModel::kRandomAffine;
      else f.fail("unknown cost_model '" + model + "' (linear_load, random_affine)");
      g.num_states = 1;
      g.discount = 0.0;
      if (g.num_facilities < 1) f.fail("num_facilities must be >= 1");
      break;
    }
    default: {
      g.num_players = f.get<int>("num_players", 2);
      g.num_states = f.get<int>("num_states", 1);
      g.discount = f.get<double>("discount", 0.9);
      if (f.has("action_counts") && f.has("actions_per_player"))
        f.fail("give either action_counts or actions_per_player, not both");
      g.action_counts = f.list<int>("action_counts", {});
      g.actions_per_player = f.get<int>("actions_per_player", 2);
      if (g.family == GameFamily::kDummyTerm) g.dummy_scale = f.get<double>("dummy_scale", 1.0);
      if (g.num_states < 1) f.fail("num_states must be >= 1");
      if (!(g.discount >= 0.0 && g.discount < 1.0)) f.fail("discount must lie in [0, 1)");
      if (g.actions_per_player < 1) f.fail("actions_per_player must be >= 1");
      if (!g.action_counts.empty() && static_cast<int>(g.action_counts.size()) != g.num_players)
        f.fail("action_counts needs one entry per player");
      for (int a : g.action_counts)
        if (a < 1) f.fail("action counts must be >= 1");
      break;
    }
  }
  if (g.family != GameFamily::kFile && g.num_players < 1) f.fail("num_players must be >= 1");
  f.finish();
  return g;
}

AlgorithmSpec parse_algorithm(const json& j, std::size_t index) {
  Fields f(j, "algorithms[" + std::to_string(index) + "]");
  AlgorithmSpec a;
  try {
    a.regularizer = parse_regularizer(f.require<std::string>("regularizer"));
  } catch (const std::invalid_argument& e) {
    f.fail(e.what());
  }
  a.label = f.get<std::string>("label", std::string(to_string(a.regularizer)));
  if (f.has("step_size")) {
    const json& v = f.raw("step_size");
    if (v.is_string()) {
      if (v.get<std::string>() != "theorem") f.fail("step_size must be a positive number or \"theorem\"");
    } else if (v.is_number() && v.get<double>() > 0.0) {
      a.step_size = v.get<double>();
    } else {
      f.fail("step_size must be a positive number or \"theorem\"");
    }
  }
  a.advantage_form = f.get<bool>("advantage_form", true);
  if (a.label.empty() || a.label.find_first_of("/\\ ,") != std::string::npos)
    f.fail("label must be nonempty without slashes, spaces or commas");
  f.finish();
  return a;
}

json source_json(const GameSource& g) {
  json j;
  j["family"] = std::string(to_string(g.family));
  switch (g.family) {
    case GameFamily::kFile:
      j["path"] = g.path.filename().string();
      break;
    case GameFamily::kCongestion:
      j["num_players"] = g.num_players;
      j["num_facilities"] = g.num_facilities;
      j["cost_model"] = std::string(cost_model_name(g.cost_model));
      break;
    default:
      j["num_players"] = g.num_players;
      j["num_states"] = g.num_states;
      j["action_counts"] = g.resolved_action_counts();
      j["discount"] = g.discount;
      if (g.family == GameFamily::kDummyTerm) j["dummy_scale"] = g.dummy_scale;
  }
  return j;
}

json algorithm_json(const AlgorithmSpec& a) {
  json j;
  j["label"] = a.label;
  j["regularizer"] = std::string(to_string(a.regularizer));
  j["step_size"] = a.step_size ? json(*a.step_size) : json("theorem");
  j["advantage_form"] = a.advantage_form;
  return j;
}

json certify_json(const CertifyOptions& c) {
  return json{{"mc_trajectories", c.mc_trajectories},
              {"mc_truncation", c.mc_truncation},
              {"fd_step", c.fd_step},
              {"projection_vectors", c.projection_vectors},
              {"enumeration_cap", c.enumeration_cap}};
}

json cell_json(const CellSpec& c) {
  return json{{"schema_version", kConfigSchemaVersion},
              {"game", source_json(c.game)},
              {"algorithm", algorithm_json(c.algorithm)},
              {"seed", c.seed},
              {"num_iterations", c.num_iterations},
              {"epsilon", c.epsilons},
              {"stop_at_epsilon", c.stop_at_epsilon},
              {"trust_mpg", c.trust_mpg},
              {"bound_nu_rho", c.bound_nu_rho},
              {"bound_nu_uniform", c.bound_nu_uniform},
              {"certify", certify_json(c.certify)}};
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double x) { return format_number(x); }
std::string num(int x) { return std::to_string(x); }
std::string num(std::size_t x) { return std::to_string(x); }

// Short label for column and instance names; values themselves keep 17 digits.
std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string ptr_num(const std::optional<int>& x) { return x ? std::to_string(*x) : "inf"; }

Certification inequality(std::string oracle, std::string instance, double main_value, double oracle_value,
                         bool pass, double tolerance = 0.0) {
  Certification c;
  c.report.oracle = std::move(oracle);
  c.report.instance = std::move(instance);
  c.report.main_value = main_value;
  c.report.oracle_value = oracle_value;
  c.report.abs_error = std::abs(main_value - oracle_value);
  c.report.rel_error = c.report.abs_error / std::max(1.0, std::abs(oracle_value));
  c.report.tolerance = tolerance;
  c.report.pass = pass;
  return c;
}

Certification skipped(std::string oracle, std::string instance, std::string note) {
  Certification c;
  c.report.oracle = std::move(oracle);
  c.report.instance = std::move(instance);
  c.report.main_value = c.report.oracle_value = std::numeric_limits<double>::quiet_NaN();
  c.skipped = true;
  c.note = std::move(note);
  return c;
}

Certification from_report(OracleReport r, std::string note = {}) {
  Certification c;
  c.report = std::move(r);
  c.note = std::move(note);
  return c;
}

// Dirichlet(1) rows; strictly positive with probability one.
JointPolicy random_interior_policy(const MarkovGame& game, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  JointPolicy policy = JointPolicy::uniform(game);
  for (int i = 0; i < game.num_players(); ++i)
    for (int s = 0; s < game.num_states(); ++s) {
      auto row = policy.row(i, s);
      double sum = 0.0;
      for (double& x : row) sum += (x = -std::log(1.0 - uniform01(rng)) + 1e-3);
      for (double& x : row) x /= sum;
    }
  return policy;
}

double verify_or_throw(const CellSpec& spec, const GameWithPotential& gp) {
  double residual = 0.0;
  try {
    residual = verify_mpg(gp.game, gp.potential, spec.certify.enumeration_cap);
  } catch (const EnumerationCapExceeded& e) {
    throw EnumerationCapExceeded(spec.id() + ": " + e.what() + "; pass --trust-mpg to skip verification");
  }
  if (!(residual < kMpgTolerance)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", residual);
    throw MpgVerificationError(spec.id() + ": MPG verification failed, residual " + buf + " >= 1e-10");
  }
  return residual;
}

// Oracles applied to one policy of one game.
void certify_policy(const MarkovGame& game, const PotentialSpec* potential, const JointPolicy& policy,
                    const std::string& instance, const CertifyOptions& opt, std::uint64_t seed,
                    std::vector<Certification>& out) {
  const auto rho = game.initial_dist();
  const EvalBundle bundle = potential ? evaluate(game, policy, *potential) : evaluate(game, policy);
  const double scale = 1.0 / (1.0 - game.discount());

  for (int i = 0; i < game.num_players(); ++i) {
    try {
      out.push_back(from_report(make_report("best_response_enumeration", instance + "/player" + std::to_string(i),
                                            best_response(game, policy, i).value,
                                            enumerated_best_response_value(game, policy, i, opt.enumeration_cap),
                                            kBestResponseTolerance)));
    } catch (const EnumerationCapExceeded& e) {
      out.push_back(skipped("best_response_enumeration", instance + "/player" + std::to_string(i), e.what()));
    }
  }

  const auto mc = mc_value_oracle(game, policy, 0, opt.mc_trajectories, opt.mc_truncation, seed);
  auto report = make_report("mc_value", instance + "/player0", bundle.value(0, rho), mc.mean,
                            3.0 * mc.standard_error + mc.truncation_error + 1e-12 * scale);
  out.push_back(from_report(report, "horizon " + std::to_string(mc.horizon)));

  double worst = 0.0, main_at = 0.0, oracle_at = 0.0;
  for (int s = 0; s < game.num_states() && s < 4; ++s)
    for (int a = 0; a < game.action_count(0); ++a) {
      const double m = policy_gradient_entry(game, policy, 0, s, a, rho);
      const double o = fd_gradient_oracle(game, policy, 0, s, a, rho, opt.fd_step);
      if (std::abs(m - o) >= worst) {
        worst = std::abs(m - o);
        main_at = m;
        oracle_at = o;
      }
    }
  out.push_back(from_report(make_report("fd_gradient", instance + "/player0", main_at, oracle_at, kGradientTolerance),
                            "worst entry over states < 4"));
}

}  // namespace

std::string_view to_string(GameFamily family) {
  switch (family) {
    case GameFamily::kIdenticalInterest: return "identical_interest";
    case GameFamily::kDummyTerm: return "dummy_term";
    case GameFamily::kCongestion: return "congestion";
    case GameFamily::kPairwiseTeam: return "pairwise_team";
    case GameFamily::kFile: return "file";
  }
  return "?";
}

std::vector<int> GameSource::resolved_action_counts() const {
  if (!action_counts.empty()) return action_counts;
  return std::vector<int>(num_players, actions_per_player);
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  Fields f(j, "root");
  const int version = f.require<int>("schema_version");
  if (version != kConfigSchemaVersion)
    f.fail("unsupported schema_version " + std::to_string(version) + " (expected 1)");

  ExperimentConfig c;
  c.name = f.get<std::string>("name", c.name);
  c.game = parse_game_source(f.require<json>("game"), base_dir);
  const json& algos = f.require<json>("algorithms");
  if (!algos.is_array() || algos.empty()) f.fail("algorithms must be a nonempty array");
  std::set<std::string> labels;
  for (std::size_t k = 0; k < algos.size(); ++k) {
    c.algorithms.push_back(parse_algorithm(algos[k], k));
    if (!labels.insert(c.algorithms.back().label).second) f.fail("duplicate algorithm label " + c.algorithms.back().label);
  }
  c.num_iterations = f.get<int>("num_iterations", c.num_iterations);
  c.epsilons = f.list<double>("epsilon", c.epsilons);
  c.seeds = f.list<std::uint64_t>("seeds", c.seeds);
  c.stop_at_epsilon = f.get<bool>("stop_at_epsilon", false);
  if (f.has("sweep")) {
    Fields s(f.raw("sweep"), "sweep");
    c.sweep_num_players = s.list<int>("num_players", {});
    s.finish();
    if (c.sweep_num_players.empty()) f.fail("sweep.num_players must be nonempty");
    for (int n : c.sweep_num_players)
      if (n < 1) f.fail("sweep.num_players entries must be >= 1");
    if (c.game.family == GameFamily::kFile) f.fail("a game file cannot be swept over num_players");
    if (!c.game.action_counts.empty()) f.fail("sweeps need actions_per_player instead of action_counts");
  }
  if (f.has("bound_reference")) {
    const auto refs = f.list<std::string>("bound_reference", {});
    c.bound_nu_rho = c.bound_nu_uniform = false;
    for (const auto& r : refs) {
      if (r == "rho") c.bound_nu_rho = true;
      else if (r == "uniform") c.bound_nu_uniform = true;
      else f.fail("bound_reference entries are rho or uniform");
    }
  }
  if (f.has("output_dir")) c.output_dir = f.get<std::string>("output_dir", "");
  if (f.has("certify")) {
    Fields k(f.raw("certify"), "certify");
    c.certify.mc_trajectories = k.get<std::size_t>("mc_trajectories", c.certify.mc_trajectories);
    c.certify.mc_truncation = k.get<double>("mc_truncation", c.certify.mc_truncation);
    c.certify.fd_step = k.get<double>("fd_step", c.certify.fd_step);
    c.certify.projection_vectors = k.get<int>("projection_vectors", c.certify.projection_vectors);
    c.certify.enumeration_cap = k.get<std::size_t>("enumeration_cap", c.certify.enumeration_cap);
    k.finish();
    if (c.certify.mc_trajectories < 2) k.fail("mc_trajectories must be >= 2");
    if (!(c.certify.mc_truncation > 0.0)) k.fail("mc_truncation must be positive");
    if (!(c.certify.fd_step >= 1e-7 && c.certify.fd_step <= 1e-3)) k.fail("fd_step must lie in [1e-7, 1e-3]");
    if (c.certify.projection_vectors < 0) k.fail("projection_vectors must be >= 0");
  }
  f.finish();

  if (c.seeds.empty()) f.fail("at least one seed is required");
  if (c.num_iterations < 1) f.fail("num_iterations must be >= 1");
  if (c.epsilons.empty()) f.fail("at least one epsilon is required");
  for (double e : c.epsilons)
    if (!(e > 0.0)) f.fail("epsilon must be positive");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_bytes(path), path.parent_path());
}

std::string canonical_config(const ExperimentConfig& c) {
  json algos = json::array();
  for (const auto& a : c.algorithms) algos.push_back(algorithm_json(a));
  std::vector<std::string> refs;
  if (c.bound_nu_rho) refs.push_back("rho");
  if (c.bound_nu_uniform) refs.push_back("uniform");
  json j{{"schema_version", kConfigSchemaVersion},
         {"name", c.name},
         {"game", source_json(c.game)},
         {"algorithms", algos},
         {"num_iterations", c.num_iterations},
         {"epsilon", c.epsilons},
         {"seeds", c.seeds},
         {"stop_at_epsilon", c.stop_at_epsilon},
         {"bound_reference", refs},
         {"certify", certify_json(c.certify)}};
  if (!c.sweep_num_players.empty()) j["sweep"] = json{{"num_players", c.sweep_num_players}};
  return j.dump(2) + "\n";
}

std::string CellSpec::id() const {
  const int n = game.family == GameFamily::kFile ? 0 : game.num_players;
  return algorithm.label + "/N" + std::to_string(n) + "/seed" + std::to_string(seed);
}

std::vector<CellSpec> expand_cells(const ExperimentConfig& config, bool trust_mpg) {
  std::vector<int> ns = config.sweep_num_players;
  if (ns.empty()) ns.push_back(config.game.num_players);
  std::vector<CellSpec> cells;
  for (const auto& algo : config.algorithms)
    for (int n : ns)
      for (auto seed : config.seeds) {
        CellSpec c;
        c.game = config.game;
        c.game.num_players = n;
        c.algorithm = algo;
        c.seed = seed;
        c.num_iterations = config.num_iterations;
        c.epsilons = config.epsilons;
        c.stop_at_epsilon = config.stop_at_epsilon;
        c.trust_mpg = trust_mpg;
        c.bound_nu_rho = config.bound_nu_rho;
        c.bound_nu_uniform = config.bound_nu_uniform;
        c.certify = config.certify;
        cells.push_back(std::move(c));
      }
  return cells;
}

GameWithPotential build_game(const GameSource& g, std::uint64_t seed) {
  switch (g.family) {
    case GameFamily::kIdenticalInterest:
      return make_identical_interest(g.num_players, g.num_states, g.resolved_action_counts(), g.discount, seed);
    case GameFamily::kDummyTerm:
      return make_dummy_term_mpg(g.num_players, g.num_states, g.resolved_action_counts(), g.discount, seed,
                                 g.dummy_scale);
    case GameFamily::kCongestion:
      return make_stateless_congestion(g.num_players, g.num_facilities, seed, g.cost_model);
    case GameFamily::kPairwiseTeam:
      return make_pairwise_team_game(g.num_players, g.num_states, g.resolved_action_counts(), g.discount, seed);
    case GameFamily::kFile: {
      LoadedGame loaded = load_game(g.path);
      if (!loaded.potential)
        throw ConfigError("game file " + g.path.string() + " has no potential; PMD bounds need phi");
      return {std::move(loaded.game), std::move(*loaded.potential)};
    }
  }
  throw ConfigError("unknown game family");
}

std::string content_hash(const CellSpec& cell) {
  std::string bytes = cell_json(cell).dump();
  if (cell.game.family == GameFamily::kFile) bytes += read_bytes(cell.game.path);
  return sha256_hex(bytes);
}

bool CellResult::all_pass() const {
  return std::all_of(certifications.begin(), certifications.end(), [](const Certification& c) { return c.ok(); });
}

Table trace_table(const RegretTrace& trace, const std::vector<double>& bound_at_t,
                  const std::vector<double>& bound_nu_rho, const std::vector<double>& bound_nu_uniform) {
  const bool kl = trace.regularizer == Regularizer::kKl;
  Table t;
  t.header = {"t", "worst_gap"};
  for (int i = 0; i < trace.num_players; ++i) t.header.push_back("gap_" + std::to_string(i));
  for (const char* h : {"potential", "running_nash_regret", "thm_bound_at_t"}) t.header.push_back(h);
  t.header.push_back(kl ? "log_sum_logZ" : "sq_displacement");
  for (const char* h : {"thm_bound_nu_rho", "thm_bound_nu_uniform", "improvement_slack"}) t.header.push_back(h);
  if (kl) t.header.push_back("c_running");

  auto at = [](const std::vector<double>& v, int k) {
    return v.empty() ? std::string("nan") : format_number(v[k]);
  };
  for (int k = 0; k < trace.length(); ++k) {
    std::vector<std::string> row = {num(k + 1), num(trace.worst_gap[k])};
    for (double g : trace.gaps[k]) row.push_back(num(g));
    row.push_back(num(trace.potential[k]));
    row.push_back(num(trace.running_regret[k]));
    row.push_back(at(bound_at_t, k));
    row.push_back(num(trace.sum_log_z[k]));
    row.push_back(at(bound_nu_rho, k));
    row.push_back(at(bound_nu_uniform, k));
    row.push_back(num(trace.improvement_slack[k]));
    if (kl) row.push_back(num(trace.c_running[k]));
    t.add_row(std::move(row));
  }
  return t;
}

CellResult run_cell(const CellSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  CellResult r;
  r.spec = spec;
  r.hash = content_hash(spec);

  const GameWithPotential gp = build_game(spec.game, spec.seed);
  const MarkovGame& game = gp.game;
  const PotentialSpec& potential = gp.potential;
  const Regularizer reg = spec.algorithm.regularizer;
  const bool kl = reg == Regularizer::kKl;
  const std::string id = spec.id();
  r.num_players = game.num_players();
  r.num_states = game.num_states();
  r.total_actions = game.total_actions();
  r.discount = game.discount();
  r.phi_max = potential.phi_max();

  if (spec.trust_mpg) {
    r.certifications.push_back(skipped("mpg_verification", id, "trusted (--trust-mpg)"));
  } else {
    r.mpg_residual = verify_or_throw(spec, gp);
    r.certifications.push_back(inequality("mpg_verification", id, *r.mpg_residual, 0.0, true, kMpgTolerance));
  }
  r.mismatch = mismatch_coefficients(game, spec.certify.enumeration_cap);

  const bool theorem_step = !spec.algorithm.step_size.has_value();
  r.step_size = theorem_step ? theorem_step_size(reg, game, potential) : *spec.algorithm.step_size;

  PmdConfig pc;
  pc.regularizer = reg;
  pc.step_size = r.step_size;
  pc.num_iterations = spec.num_iterations;
  pc.advantage_form = spec.algorithm.advantage_form;
  RegretTracker tracker(game, reg, r.step_size);
  std::optional<double> stop;
  if (spec.stop_at_epsilon) stop = *std::min_element(spec.epsilons.begin(), spec.epsilons.end());
  const PmdTrace pmd = run_pmd(game, potential, pc, tracker.observer(stop));
  r.trace = tracker.take();
  const RegretTrace& tr = r.trace;
  const int T = tr.length();

  std::optional<double> c;
  if (kl) c = tr.empirical_c();
  std::vector<double> bound(T), nu_rho, nu_uniform;
  for (int k = 0; k < T; ++k) bound[k] = theorem_bound(reg, game, potential, r.mismatch, k + 1, c);
  auto bound_with = [&](double kappa, std::vector<double>& out) {
    out.resize(T);
    for (int k = 0; k < T; ++k)
      out[k] = theorem_bound(reg, r.phi_max, kappa, r.total_actions, r.num_players, r.discount, k + 1, c);
  };
  if (spec.bound_nu_rho) bound_with(r.mismatch.kappa_rho, nu_rho);
  if (spec.bound_nu_uniform) bound_with(r.mismatch.kappa_uniform, nu_uniform);

  // Running regret is the prefix average of the worst gap.
  double sum = 0.0, prefix_err = 0.0;
  for (int k = 0; k < T; ++k) {
    sum += tr.worst_gap[k];
    prefix_err = std::max(prefix_err, std::abs(tr.running_regret[k] - sum / (k + 1)));
  }
  r.certifications.push_back(
      inequality("prefix_average", id, prefix_err, 0.0, prefix_err <= kPrefixTolerance, kPrefixTolerance));

  const double g = r.discount;
  const double euclid_coeff = 1.0 / (2.0 * r.step_size * (1.0 - g)) -
                              r.phi_max * r.total_actions / ((1.0 - g) * (1.0 - g));
  const bool improvement_claimed =
      kl ? (1.0 - g) * r.step_size <= kl_improvement_step_limit(game, potential) : true;
  const bool monotone_claimed = kl ? improvement_claimed : euclid_coeff >= 0.0;
  const double min_slack = *std::min_element(tr.improvement_slack.begin(), tr.improvement_slack.end());
  if (improvement_claimed) {
    r.certifications.push_back(inequality("improvement_inequality", id, min_slack, 0.0,
                                          min_slack >= -kSlackTolerance, kSlackTolerance));
  } else {
    r.certifications.push_back(skipped("improvement_inequality", id, "step size above the proven range"));
  }
  double min_increase = std::numeric_limits<double>::infinity();
  for (const auto& rec : pmd.records) min_increase = std::min(min_increase, rec.potential_next - rec.potential);
  if (monotone_claimed) {
    r.certifications.push_back(inequality("potential_monotone", id, min_increase, 0.0,
                                          min_increase >= -kMonotoneTolerance, kMonotoneTolerance));
  } else {
    r.certifications.push_back(skipped("potential_monotone", id, "step size above the proven range"));
  }

  double worst_excess = -std::numeric_limits<double>::infinity();
  int worst_t = 0;
  for (int k = 0; k < T; ++k)
    if (tr.running_regret[k] - bound[k] > worst_excess) {
      worst_excess = tr.running_regret[k] - bound[k];
      worst_t = k;
    }
  if (theorem_step) {
    r.certifications.push_back(inequality("regret_bound", id + "/t" + std::to_string(worst_t + 1),
                                          tr.running_regret[worst_t], bound[worst_t], worst_excess <= 0.0));
  } else {
    r.certifications.push_back(skipped("regret_bound", id, "custom step size"));
  }

  for (double eps : spec.epsilons) {
    r.iterations_to.push_back(tr.iterations_to(eps));
    const double b = theorem_iteration_bound(reg, r.phi_max, r.mismatch.kappa_tilde_upper, r.total_actions,
                                             r.num_players, g, eps, c);
    const double b_free = kl ? theorem_iteration_bound(reg, r.phi_max, r.mismatch.kappa_tilde_upper,
                                                       r.total_actions, r.num_players, g, eps, 1.0)
                             : b;
    r.iteration_bound.push_back(b);
    r.iteration_bound_c_free.push_back(b_free);
    const std::string inst = id + "/eps" + tag(eps);
    const auto& hit = r.iterations_to.back();
    if (!theorem_step) {
      r.certifications.push_back(skipped("iteration_bound", inst, "custom step size"));
    } else if (hit) {
      r.certifications.push_back(inequality("iteration_bound", inst, *hit, b, *hit <= b));
    } else if (T >= b) {
      r.certifications.push_back(inequality("iteration_bound", inst, T, b, false));
    } else {
      r.certifications.push_back(skipped("iteration_bound", inst, "epsilon not reached before the bound"));
    }
  }

  certify_policy(game, &potential, pmd.final_policy, id + "/final", spec.certify, spec.seed, r.certifications);

  r.trace_table = trace_table(tr, bound, nu_rho, nu_uniform);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Table summary_table(std::span<const CellResult> cells) {
  Table t;
  t.header = {"algorithm",  "regularizer",  "num_players",    "seed",           "num_states",
              "total_actions", "discount",  "phi_max",        "step_size",      "iterations_run",
              "final_nash_regret", "min_worst_gap", "empirical_c", "kappa_rho", "kappa_uniform",
              "kappa_tilde_upper", "kappa_method", "mpg_residual", "clamped_gaps", "certifications",
              "content_hash"};
  std::vector<double> eps;
  if (!cells.empty()) eps = cells.front().spec.epsilons;
  for (double e : eps) {
    t.header.push_back("iterations_to_eps_" + tag(e));
    t.header.push_back("theorem_iteration_bound_eps_" + tag(e));
  }
  for (const auto& c : cells) {
    const auto& tr = c.trace;
    const bool kl = c.spec.algorithm.regularizer == Regularizer::kKl;
    std::vector<std::string> row = {
        c.spec.algorithm.label,
        std::string(to_string(c.spec.algorithm.regularizer)),
        num(c.num_players),
        std::to_string(c.spec.seed),
        num(c.num_states),
        num(c.total_actions),
        num(c.discount),
        num(c.phi_max),
        num(c.step_size),
        num(tr.length()),
        num(tr.final_regret()),
        num(*std::min_element(tr.worst_gap.begin(), tr.worst_gap.end())),
        kl ? num(tr.empirical_c()) : std::string("nan"),
        num(c.mismatch.kappa_rho),
        num(c.mismatch.kappa_uniform),
        num(c.mismatch.kappa_tilde_upper),
        c.mismatch.method(),
        c.mpg_residual ? num(*c.mpg_residual) : std::string("nan"),
        num(tr.clamped_gaps),
        c.all_pass() ? "pass" : "fail",
        c.hash};
    for (std::size_t k = 0; k < eps.size(); ++k) {
      row.push_back(ptr_num(c.iterations_to[k]));
      row.push_back(num(c.iteration_bound[k]));
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table certification_table(std::span<const CellResult> cells) {
  Table t;
  t.header = {"cell", "oracle", "instance", "main_value", "oracle_value", "abs_error", "rel_error",
              "tolerance", "status", "note"};
  for (const auto& c : cells)
    for (const auto& k : c.certifications) {
      const auto& r = k.report;
      t.add_row({c.spec.id(), r.oracle, r.instance, num(r.main_value), num(r.oracle_value), num(r.abs_error),
                 num(r.rel_error), num(r.tolerance), k.skipped ? "skipped" : (r.pass ? "pass" : "fail"), k.note});
    }
  return t;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Table scaling_summary(std::span<const CellResult> cells) {
  if (cells.empty()) throw ConfigError("scaling summary: no artifacts");
  // Everything but the algorithm, N and seed must agree.
  auto shape = [](const CellSpec& s) {
    CellSpec k = s;
    k.algorithm = {};
    k.game.num_players = 0;
    k.seed = 0;
    return cell_json(k).dump();
  };
  const std::string reference = shape(cells.front().spec);
  for (const auto& c : cells)
    if (shape(c.spec) != reference) throw ConfigError("scaling summary: incompatible artifacts (" + c.spec.id() + ")");

  std::vector<std::string> labels;
  std::map<std::pair<std::string, int>, std::vector<const CellResult*>> by;
  for (const auto& c : cells) {
    if (std::find(labels.begin(), labels.end(), c.spec.algorithm.label) == labels.end())
      labels.push_back(c.spec.algorithm.label);
    by[{c.spec.algorithm.label, c.num_players}].push_back(&c);
  }

  Table t;
  t.header = {"algorithm",
              "num_players",
              "epsilon",
              "seeds",
              "iterations_to_eps",
              "max_iterations_to_eps",
              "theorem_iteration_bound",
              "theorem_iteration_bound_c_free",
              "empirical_within_bound",
              "empirical_growth",
              "bound_growth_c_free"};
  const auto& eps = cells.front().spec.epsilons;
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (const auto& label : labels) {
      double base_hit = 0.0, base_bound = 0.0;
      bool first = true;
      for (const auto& [key, group] : by) {
        if (key.first != label) continue;
        std::vector<double> hits, bounds, free_bounds;
        bool within = true;
        for (const CellResult* c : group) {
          const auto& hit = c->iterations_to[e];
          hits.push_back(hit ? *hit : std::numeric_limits<double>::infinity());
          bounds.push_back(c->iteration_bound[e]);
          free_bounds.push_back(c->iteration_bound_c_free[e]);
          if (hit && *hit > c->iteration_bound[e]) within = false;
        }
        const double med = median(hits);
        const double med_free = median(free_bounds);
        if (first) {
          base_hit = med;
          base_bound = med_free;
          first = false;
        }
        t.add_row({label, num(key.second), num(eps[e]), num(group.size()), num(med),
                   num(*std::max_element(hits.begin(), hits.end())), num(median(bounds)), num(med_free),
                   within ? "true" : "false", num(med / base_hit), num(med_free / base_bound)});
      }
    }
  return t;
}

Table bounds_table(const ExperimentConfig& config) {
  Table t;
  t.header = {"algorithm",   "num_players", "seed",          "num_states",        "total_actions",
              "discount",    "phi_max",     "kappa_rho",     "kappa_uniform",     "kappa_tilde_upper",
              "kappa_method", "step_size",  "epsilon",       "num_iterations",    "thm_bound_at_T",
              "theorem_iteration_bound", "c_assumed"};
  for (const auto& cell : expand_cells(config, true)) {
    const auto gp = build_game(cell.game, cell.seed);
    const auto m = mismatch_coefficients(gp.game, cell.certify.enumeration_cap);
    const Regularizer reg = cell.algorithm.regularizer;
    const bool kl = reg == Regularizer::kKl;
    const std::optional<double> c = kl ? std::optional<double>(1.0) : std::nullopt;
    const double step =
        cell.algorithm.step_size ? *cell.algorithm.step_size : theorem_step_size(reg, gp.game, gp.potential);
    for (double eps : cell.epsilons) {
      t.add_row({cell.algorithm.label, num(gp.game.num_players()), std::to_string(cell.seed),
                 num(gp.game.num_states()), num(gp.game.total_actions()), num(gp.game.discount()),
                 num(gp.potential.phi_max()), num(m.kappa_rho), num(m.kappa_uniform), num(m.kappa_tilde_upper),
                 m.method(), num(step), num(eps), num(cell.num_iterations),
                 num(theorem_bound(reg, gp.game, gp.potential, m, cell.num_iterations, c)),
                 num(theorem_iteration_bound(reg, gp.potential.phi_max(), m.kappa_tilde_upper,
                                             gp.game.total_actions(), gp.game.num_players(), gp.game.discount(),
                                             eps, c)),
                 kl ? "1" : "nan"});
    }
  }
  return t;
}

std::vector<Certification> certify_instances(const ExperimentConfig& config, bool trust_mpg) {
  std::vector<int> ns = config.sweep_num_players;
  if (ns.empty()) ns.push_back(config.game.num_players);
  std::vector<Certification> out;
  for (int n : ns)
    for (auto seed : config.seeds) {
      CellSpec cell;
      cell.game = config.game;
      cell.game.num_players = n;
      cell.seed = seed;
      cell.certify = config.certify;
      cell.algorithm.label = "certify";
      const std::string instance = std::string(to_string(config.game.family)) + "/N" + std::to_string(n) +
                                   "/seed" + std::to_string(seed);
      const auto gp = build_game(cell.game, seed);
      const auto& game = gp.game;
      if (trust_mpg) {
        out.push_back(skipped("mpg_verification", instance, "trusted (--trust-mpg)"));
      } else {
        try {
          const double res = verify_mpg(game, gp.potential, config.certify.enumeration_cap);
          out.push_back(inequality("mpg_verification", instance, res, 0.0, res < kMpgTolerance, kMpgTolerance));
        } catch (const EnumerationCapExceeded& e) {
          throw EnumerationCapExceeded(instance + ": " + e.what() + "; pass --trust-mpg to skip verification");
        }
      }

      const JointPolicy policy = random_interior_policy(game, seed);
      const auto bundle = evaluate(game, policy, gp.potential);
      const auto rho = game.initial_dist();
      const double scale = 1.0 / (1.0 - game.discount());
      for (int i = 0; i < game.num_players(); ++i)
        out.push_back(from_report(make_report("exact_value", instance + "/player" + std::to_string(i),
                                              bundle.value(i, rho), oracle_value(game, policy, i, rho),
                                              1e-10 * scale)));
      out.push_back(from_report(make_report("exact_potential", instance, bundle.total_potential(rho),
                                            oracle_potential(game, gp.potential.table(), policy, rho),
                                            1e-10 * scale)));
      certify_policy(game, &gp.potential, policy, instance, config.certify, seed, out);

      std::mt19937_64 rng(splitmix64(seed + 0x9e37ULL));
      double worst = 0.0;
      for (int k = 0; k < config.certify.projection_vectors; ++k) {
        std::vector<double> v(2 + k % 7);
        for (double& x : v) x = 6.0 * uniform01(rng) - 3.0;
        const auto p = project_simplex(v);
        const auto o = projection_oracle(v);
        for (std::size_t a = 0; a < v.size(); ++a) worst = std::max(worst, std::abs(p[a] - o[a]));
      }
      if (config.certify.projection_vectors > 0)
        out.push_back(inequality("projection", instance + "/" + std::to_string(config.certify.projection_vectors) +
                                                   "_vectors",
                                 worst, 0.0, worst <= kProjectionTolerance, kProjectionTolerance));
    }
  return out;
}

}  // namespace mpg
