#include "mpg/game_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mpg {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw GameError(std::string("game file: missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw GameError("game file: " + where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw GameError("game file: " + where + " must be finite");
  return x;
}

int positive_int(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1) throw GameError("game file: " + where + " must be a positive integer");
  return v.get<int>();
}

const json& array_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n) {
    std::ostringstream os;
    os << "game file: " << where << " must be an array of length " << n;
    throw GameError(os.str());
  }
  return v;
}

// Flattens a [s][joint_a] table in row-major order.
std::vector<double> state_action_table(const json& v, std::size_t S, std::size_t A, const std::string& where) {
  std::vector<double> out;
  out.reserve(S * A);
  array_of(v, S, where);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& row = array_of(v[s], A, where + "[" + std::to_string(s) + "]");
    for (std::size_t a = 0; a < A; ++a) out.push_back(number(row[a], where));
  }
  return out;
}

}  // namespace

LoadedGame parse_game(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GameError(std::string("game file: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw GameError("game file: top level must be an object");
  static const std::set<std::string> known = {"num_players", "num_states",  "action_counts", "discount", "initial_dist",
                                              "transition",  "rewards",     "potential",     "phi_max"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw GameError("game file: unknown field '" + key + "'");

  GameTables t;
  t.num_players = positive_int(field(doc, "num_players"), "num_players");
  t.num_states = positive_int(field(doc, "num_states"), "num_states");
  const auto& counts = array_of(field(doc, "action_counts"), t.num_players, "action_counts");
  for (const auto& c : counts) t.action_counts.push_back(positive_int(c, "action_counts"));
  t.discount = number(field(doc, "discount"), "discount");
  const auto S = static_cast<std::size_t>(t.num_states);
  for (const auto& x : array_of(field(doc, "initial_dist"), S, "initial_dist")) t.initial_dist.push_back(number(x, "initial_dist"));

  const std::size_t A = JointActionSpace(t.action_counts).size();
  const auto& transition = array_of(field(doc, "transition"), S, "transition");
  t.transition.reserve(S * A * S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& by_action = array_of(transition[s], A, "transition[s]");
    for (std::size_t a = 0; a < A; ++a)
      for (const auto& p : array_of(by_action[a], S, "transition[s][a]")) t.transition.push_back(number(p, "transition"));
  }
  const auto& rewards = array_of(field(doc, "rewards"), t.num_players, "rewards");
  for (int i = 0; i < t.num_players; ++i)
    t.rewards.push_back(state_action_table(rewards[i], S, A, "rewards[" + std::to_string(i) + "]"));

  LoadedGame out{MarkovGame::create(std::move(t)), std::nullopt};
  if (doc.contains("potential")) {
    PotentialSpec potential(state_action_table(doc["potential"], S, A, "potential"), S, A);
    if (doc.contains("phi_max") && number(doc["phi_max"], "phi_max") != potential.phi_max())
      throw GameError("game file: phi_max does not equal max |potential|");
    out.potential = std::move(potential);
  } else if (doc.contains("phi_max")) {
    throw GameError("game file: phi_max given without potential");
  }
  return out;
}

LoadedGame load_game(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GameError("game file: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_game(buffer.str());
}

std::string dump_game(const MarkovGame& game, const PotentialSpec* potential) {
  const int S = game.num_states();
  const std::size_t A = game.num_joint_actions();
  json doc;
  doc["num_players"] = game.num_players();
  doc["num_states"] = S;
  doc["action_counts"] = game.action_counts();
  doc["discount"] = game.discount();
  doc["initial_dist"] = std::vector<double>(game.initial_dist().begin(), game.initial_dist().end());
  json transition = json::array();
  for (int s = 0; s < S; ++s) {
    json rows = json::array();
    for (std::size_t a = 0; a < A; ++a) {
      auto row = game.transition_row(s, a);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    transition.push_back(std::move(rows));
  }
  doc["transition"] = std::move(transition);
  auto table = [&](auto&& at) {
    json out = json::array();
    for (int s = 0; s < S; ++s) {
      json row = json::array();
      for (std::size_t a = 0; a < A; ++a) row.push_back(at(s, a));
      out.push_back(std::move(row));
    }
    return out;
  };
  json rewards = json::array();
  for (int i = 0; i < game.num_players(); ++i) rewards.push_back(table([&](int s, std::size_t a) { return game.reward(i, s, a); }));
  doc["rewards"] = std::move(rewards);
  if (potential) {
    doc["potential"] = table([&](int s, std::size_t a) { return potential->phi(s, a); });
    doc["phi_max"] = potential->phi_max();
  }
  return doc.dump(1);
}

void save_game(const std::filesystem::path& path, const MarkovGame& game, const PotentialSpec* potential) {
  std::ofstream out(path);
  if (!out) throw GameError("game file: cannot write " + path.string());
  out << dump_game(game, potential) << '\n';
}

}  // namespace mpg
