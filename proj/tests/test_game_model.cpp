#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "mpg/evaluation.hpp"
#include "mpg/game_io.hpp"
#include "mpg/generators.hpp"
#include "mpg/metrics.hpp"
#include "mpg/mpg_check.hpp"

using namespace mpg;

namespace {

bool rows_valid(const MarkovGame& g) {
  for (int s = 0; s < g.num_states(); ++s)
    for (std::size_t a = 0; a < g.num_joint_actions(); ++a)
      if (!is_distribution(g.transition_row(s, a))) return false;
  return is_distribution(g.initial_dist());
}

double recomputed_phi_max(const PotentialSpec& p) {
  double m = 0.0;
  for (double x : p.table()) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("joint action space is row-major with player 0 most significant") {
  JointActionSpace space({2, 3});
  CHECK(space.size() == 6);
  CHECK(space.digit(5, 0) == 1);
  CHECK(space.digit(5, 1) == 2);
  std::vector<int> actions = {1, 0};
  CHECK(space.encode(actions) == 3);
  CHECK(space.with_action(5, 1, 0) == 3);
  std::vector<int> out(2);
  space.decode(4, out);
  CHECK(out == std::vector<int>{1, 1});
}

TEST_CASE("game construction rejects invalid tables") {
  auto base = [] {
    GameTables t;
    t.num_players = 2;
    t.num_states = 1;
    t.action_counts = {1, 2};
    t.discount = 0.5;
    t.initial_dist = {1.0};
    t.transition = {1.0, 1.0};
    t.rewards = {{0.0, 1.0}, {1.0, 0.0}};
    return t;
  };
  CHECK_NOTHROW(MarkovGame::create(base()));
  auto t = base();
  t.transition[0] = 0.9;
  CHECK_THROWS_AS(MarkovGame::create(t), GameError);
  t = base();
  t.initial_dist = {0.5};
  CHECK_THROWS_AS(MarkovGame::create(t), GameError);
  t = base();
  t.num_players = 1;
  t.action_counts = {2};
  t.rewards = {{0.0, 1.0}};
  CHECK_THROWS_AS(MarkovGame::create(t), GameError);
  t = base();
  t.discount = 1.0;
  CHECK_THROWS_AS(MarkovGame::create(t), GameError);
  t = base();
  t.rewards[1].pop_back();
  CHECK_THROWS_AS(MarkovGame::create(t), GameError);
}

TEST_CASE("identical-interest generator") {
  SUBCASE("single state with zero discount: potential is the one-shot expectation") {
    auto [game, potential] = make_identical_interest(2, 1, {2, 2}, 0.0, 7);
    std::mt19937_64 rng(3);
    const auto policy = testing::random_policy(game, rng);
    double expected = 0.0;
    for (std::size_t a = 0; a < 4; ++a) expected += policy.joint_prob(game.joint(), 0, a) * potential.phi(0, a);
    CHECK(total_potential(game, potential, policy, game.initial_dist()) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("three states, gamma 0.9, seed 1 certifies as an MPG") {
    auto [game, potential] = make_identical_interest(2, 3, {2, 2}, 0.9, 1);
    CHECK(verify_mpg(game, potential) < 1e-10);
    CHECK(rows_valid(game));
  }
  SUBCASE("same seed gives bit-identical games") {
    auto a = make_identical_interest(3, 2, {2, 3, 2}, 0.8, 11);
    auto b = make_identical_interest(3, 2, {2, 3, 2}, 0.8, 11);
    CHECK(dump_game(a.game, &a.potential) == dump_game(b.game, &b.potential));
    auto c = make_identical_interest(3, 2, {2, 3, 2}, 0.8, 12);
    CHECK(dump_game(a.game, &a.potential) != dump_game(c.game, &c.potential));
  }
  SUBCASE("invalid sizes are rejected") {
    CHECK_THROWS_AS(make_identical_interest(1, 2, {2}, 0.9, 0), GameError);
    CHECK_THROWS_AS(make_identical_interest(2, 0, {2, 2}, 0.9, 0), GameError);
    CHECK_THROWS_AS(make_identical_interest(2, 2, {2, 0}, 0.9, 0), GameError);
    CHECK_THROWS_AS(make_identical_interest(2, 2, {2}, 0.9, 0), GameError);
  }
}

TEST_CASE("dummy-term generator") {
  auto [game, potential] = make_dummy_term_mpg(2, 3, {2, 3}, 0.9, 5);
  CHECK(verify_mpg(game, potential) < 1e-10);
  CHECK(game.action_independent_dynamics());
  CHECK(rows_valid(game));

  bool differ = false;
  for (int s = 0; s < game.num_states(); ++s)
    for (std::size_t a = 0; a < game.num_joint_actions(); ++a)
      if (game.reward(0, s, a) != game.reward(1, s, a)) differ = true;
  CHECK(differ);

  auto zero = make_dummy_term_mpg(2, 3, {2, 3}, 0.9, 5, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 6; ++a) CHECK(zero.game.reward(i, s, a) == zero.potential.phi(s, a));
}

TEST_CASE("stateless congestion generator") {
  SUBCASE("two players, two facilities, linear cost") {
    auto [game, potential] = make_stateless_congestion(2, 2, 0);
    CHECK(game.num_states() == 1);
    CHECK(game.discount() == 0.0);
    // (0,0): both on facility 0 -> cost 2 each; (0,1): split -> cost 1 each.
    CHECK(game.reward(0, 0, 0) == -2.0);
    CHECK(game.reward(1, 0, 0) == -2.0);
    CHECK(game.reward(0, 0, 1) == -1.0);
    CHECK(game.reward(1, 0, 1) == -1.0);
    CHECK(verify_mpg(game, potential) < 1e-12);
    const auto split = JointPolicy::deterministic(game, {{0}, {1}});
    CHECK(nash_gap(game, split).worst == 0.0);
  }
  SUBCASE("one facility leaves no deviations") {
    auto [game, potential] = make_stateless_congestion(3, 1, 0);
    CHECK(game.num_joint_actions() == 1);
    CHECK(nash_gap(game, JointPolicy::uniform(game)).worst == 0.0);
  }
  SUBCASE("random affine costs, more players") {
    for (int n = 2; n <= 5; ++n) {
      auto [game, potential] = make_stateless_congestion(n, 3, 100 + n, CostModel::kRandomAffine);
      CHECK(verify_mpg(game, potential) < 1e-12);
    }
  }
}

TEST_CASE("pairwise team generator is identical-interest with phi in [0,1]") {
  auto [game, potential] = make_pairwise_team_game(4, 1, {2, 2, 2, 2}, 0.9, 3);
  CHECK(potential.phi_max() == 1.0);
  for (double x : potential.table()) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  CHECK(verify_mpg(game, potential) < 1e-10);
}

TEST_CASE("phi_max equals the recomputed maximum exactly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto a = make_identical_interest(2, 2, {3, 2}, 0.7, seed);
    auto b = make_dummy_term_mpg(3, 2, {2, 2, 2}, 0.7, seed);
    auto c = make_stateless_congestion(3, 2, seed, CostModel::kRandomAffine);
    CHECK(a.potential.phi_max() == recomputed_phi_max(a.potential));
    CHECK(b.potential.phi_max() == recomputed_phi_max(b.potential));
    CHECK(c.potential.phi_max() == recomputed_phi_max(c.potential));
  }
}

TEST_CASE("verify_mpg detects a corrupted reward") {
  auto [game, potential] = make_identical_interest(2, 2, {2, 2}, 0.9, 4);
  GameTables t = game.tables();
  t.rewards[0][3] += 0.1;
  const auto corrupted = MarkovGame::create(std::move(t));
  CHECK(verify_mpg(corrupted, potential) > 0.01);
}

TEST_CASE("verify_mpg refuses games over the enumeration cap") {
  auto [game, potential] = make_identical_interest(3, 4, {3, 3, 3}, 0.9, 0);
  CHECK_THROWS_AS(verify_mpg(game, potential, 1000), EnumerationCapExceeded);
}

TEST_CASE("policy validation") {
  auto [game, potential] = testing::coordination_game();
  JointPolicy p = JointPolicy::uniform(game);
  CHECK_NOTHROW(p.validate());
  CHECK(p.joint_prob(game.joint(), 0, 2) == 0.25);
  p.row(0, 0)[0] = 0.7;
  CHECK_THROWS_AS(p.validate(), GameError);
  p.row(0, 0)[1] = 0.3;
  CHECK_NOTHROW(p.validate());
  p.row(0, 0)[1] = -0.3;
  p.row(0, 0)[0] = 1.3;
  CHECK_THROWS_AS(p.validate(), GameError);
}

TEST_CASE("game file round trip") {
  auto [game, potential] = make_dummy_term_mpg(2, 2, {2, 3}, 0.75, 9);
  const auto text = dump_game(game, &potential);
  const auto loaded = parse_game(text);
  CHECK(loaded.potential.has_value());
  CHECK(dump_game(loaded.game, &*loaded.potential) == text);

  const auto dir = std::filesystem::temp_directory_path() / "mpg_io_test";
  std::filesystem::create_directories(dir);
  save_game(dir / "g.json", game, nullptr);
  const auto from_file = load_game(dir / "g.json");
  CHECK_FALSE(from_file.potential.has_value());
  CHECK(from_file.game.tables().rewards == game.tables().rewards);
  std::filesystem::remove_all(dir);
}

TEST_CASE("game file loader rejects malformed documents") {
  const std::string good = R"({"num_players": 2, "num_states": 1, "action_counts": [1, 2], "discount": 0.5,
    "initial_dist": [1.0], "transition": [[[1.0], [1.0]]], "rewards": [[[0.0, 1.0]], [[1.0, 0.0]]],
    "potential": [[0.0, 1.0]], "phi_max": 1.0})";
  CHECK_NOTHROW(parse_game(good));
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK_THROWS_AS(parse_game(replace("[[[1.0], [1.0]]]", "[[[0.5], [1.0]]]")), GameError);
  CHECK_THROWS_AS(parse_game(replace("\"phi_max\": 1.0", "\"phi_max\": 2.0")), GameError);
  CHECK_THROWS_AS(parse_game(replace("\"discount\"", "\"discout\"")), GameError);
  CHECK_THROWS_AS(parse_game(replace("[[0.0, 1.0]], [[1.0, 0.0]]", "[[0.0, 1.0]]")), GameError);
  CHECK_THROWS_AS(parse_game("{not json"), GameError);
}
