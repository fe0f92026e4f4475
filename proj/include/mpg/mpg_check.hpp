#pragma once

#include "mpg/game.hpp"
#include "mpg/oracles.hpp"

namespace mpg {

/// Max over players i and deterministic pairs (pi_i', pi) of
/// |[V_i(pi_i', pi_-i) - V_i(pi)] - [Phi(pi_i', pi_-i) - Phi(pi)]| at rho.
///
/// Equivalently the spread of D_i = V_i - Phi over player i's choices for each
/// fixed opponent profile, so each deterministic joint policy is evaluated
/// once. `cap` bounds the number of evaluated policies; exceeding it throws
/// EnumerationCapExceeded.
double verify_mpg(const MarkovGame& game, const PotentialSpec& potential, std::size_t cap = kDefaultEnumerationCap);

}  // namespace mpg
