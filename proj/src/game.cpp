#include "mpg/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mpg {

JointActionSpace::JointActionSpace(std::vector<int> action_counts) : counts_(std::move(action_counts)) {
  strides_.assign(counts_.size(), 1);
  size_ = 1;
  for (int i = static_cast<int>(counts_.size()) - 1; i >= 0; --i) {
    if (counts_[i] < 1) throw GameError("action count must be >= 1");
    strides_[i] = size_;
    if (size_ > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(counts_[i]))
      throw GameError("joint action space too large");
    size_ *= static_cast<std::size_t>(counts_[i]);
  }
}

void JointActionSpace::decode(std::size_t joint, std::span<int> out) const {
  for (int i = num_players() - 1; i >= 0; --i) {
    out[i] = static_cast<int>(joint % counts_[i]);
    joint /= counts_[i];
  }
}

std::size_t JointActionSpace::encode(std::span<const int> actions) const {
  std::size_t joint = 0;
  for (int i = 0; i < num_players(); ++i) joint += static_cast<std::size_t>(actions[i]) * strides_[i];
  return joint;
}

bool is_distribution(std::span<const double> row, double tolerance) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw GameError("invalid game: " + what); }

}  // namespace

MarkovGame::MarkovGame(GameTables tables) : tables_(std::move(tables)), joint_(tables_.action_counts) {}

MarkovGame MarkovGame::create(GameTables t) {
  if (t.num_players < 2) fail("num_players must be >= 2");
  if (t.num_states < 1) fail("num_states must be >= 1");
  if (static_cast<int>(t.action_counts.size()) != t.num_players) fail("action_counts size != num_players");
  if (!(t.discount >= 0.0 && t.discount < 1.0)) fail("discount must lie in [0, 1)");

  MarkovGame game(std::move(t));
  const auto& tb = game.tables_;
  const auto S = static_cast<std::size_t>(tb.num_states);
  const std::size_t A = game.joint_.size();

  if (tb.initial_dist.size() != S) fail("initial_dist has wrong length");
  if (!is_distribution(tb.initial_dist)) fail("initial_dist is not a distribution");
  if (tb.transition.size() != S * A * S) fail("transition table has wrong size");
  for (int s = 0; s < tb.num_states; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      if (!is_distribution(game.transition_row(s, a))) {
        std::ostringstream os;
        os << "transition row (s=" << s << ", a=" << a << ") is not a distribution";
        fail(os.str());
      }
    }
  }
  if (static_cast<int>(tb.rewards.size()) != tb.num_players) fail("rewards must have one table per player");
  for (const auto& r : tb.rewards) {
    if (r.size() != S * A) fail("reward table has wrong size");
    for (double x : r)
      if (!std::isfinite(x)) fail("non-finite reward");
  }
  return game;
}

int MarkovGame::total_actions() const {
  return std::accumulate(tables_.action_counts.begin(), tables_.action_counts.end(), 0);
}

bool MarkovGame::action_independent_dynamics() const {
  for (int s = 0; s < num_states(); ++s) {
    auto first = transition_row(s, 0);
    for (std::size_t a = 1; a < joint_.size(); ++a) {
      auto row = transition_row(s, a);
      if (!std::equal(first.begin(), first.end(), row.begin())) return false;
    }
  }
  return true;
}

PotentialSpec::PotentialSpec(std::vector<double> phi, std::size_t num_states, std::size_t num_joint_actions)
    : phi_(std::move(phi)), num_joint_(num_joint_actions) {
  if (phi_.size() != num_states * num_joint_actions) throw GameError("potential table has wrong size");
  for (double x : phi_) {
    if (!std::isfinite(x)) throw GameError("non-finite potential entry");
    phi_max_ = std::max(phi_max_, std::abs(x));
  }
}

bool PotentialSpec::compatible_with(const MarkovGame& game) const {
  return num_joint_ == game.num_joint_actions() &&
         phi_.size() == static_cast<std::size_t>(game.num_states()) * game.num_joint_actions();
}

JointPolicy::JointPolicy(std::vector<int> action_counts, int num_states)
    : counts_(std::move(action_counts)), num_states_(num_states) {
  probs_.reserve(counts_.size());
  for (int c : counts_) probs_.emplace_back(static_cast<std::size_t>(c) * num_states_, 0.0);
}

JointPolicy JointPolicy::uniform(const MarkovGame& game) {
  JointPolicy policy(game.action_counts(), game.num_states());
  for (int i = 0; i < game.num_players(); ++i) {
    std::fill(policy.probs_[i].begin(), policy.probs_[i].end(), 1.0 / game.action_count(i));
  }
  return policy;
}

JointPolicy JointPolicy::deterministic(const MarkovGame& game, const std::vector<std::vector<int>>& choices) {
  JointPolicy policy(game.action_counts(), game.num_states());
  if (static_cast<int>(choices.size()) != game.num_players()) throw GameError("choices: wrong player count");
  for (int i = 0; i < game.num_players(); ++i) {
    if (static_cast<int>(choices[i].size()) != game.num_states()) throw GameError("choices: wrong state count");
    for (int s = 0; s < game.num_states(); ++s) {
      const int a = choices[i][s];
      if (a < 0 || a >= game.action_count(i)) throw GameError("choices: action out of range");
      policy.row(i, s)[a] = 1.0;
    }
  }
  return policy;
}

double JointPolicy::joint_prob(const JointActionSpace& space, int s, std::size_t a) const {
  double p = 1.0;
  for (int i = 0; i < num_players(); ++i) p *= prob(i, s, space.digit(a, i));
  return p;
}

bool JointPolicy::matches(const MarkovGame& game) const {
  return counts_ == game.action_counts() && num_states_ == game.num_states();
}

void JointPolicy::validate(double tolerance) const {
  for (int i = 0; i < num_players(); ++i) {
    for (int s = 0; s < num_states_; ++s) {
      if (!is_distribution(row(i, s), tolerance)) {
        std::ostringstream os;
        os << "policy row (player=" << i << ", s=" << s << ") is not a distribution";
        throw GameError(os.str());
      }
    }
  }
}

bool JointPolicy::strictly_positive() const {
  for (const auto& t : probs_)
    for (double p : t)
      if (!(p > 0.0)) return false;
  return true;
}

}  // namespace mpg
