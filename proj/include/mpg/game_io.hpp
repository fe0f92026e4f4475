#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mpg/game.hpp"

namespace mpg {

struct LoadedGame {
  MarkovGame game;
  std::optional<PotentialSpec> potential;
};

/// JSON game document: num_players, num_states, action_counts, discount,
/// initial_dist, transition [s][joint_a][s'], rewards [i][s][joint_a], and
/// optionally potential [s][joint_a] and phi_max. Throws GameError on any
/// shape or invariant violation.
LoadedGame parse_game(const std::string& text);
LoadedGame load_game(const std::filesystem::path& path);

std::string dump_game(const MarkovGame& game, const PotentialSpec* potential = nullptr);
void save_game(const std::filesystem::path& path, const MarkovGame& game, const PotentialSpec* potential = nullptr);

}  // namespace mpg
