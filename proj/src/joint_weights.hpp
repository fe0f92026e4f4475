#pragma once

#include <vector>

#include "mpg/game.hpp"

namespace mpg::detail {

// Iterates joint actions in index order while maintaining the digits and the
// prefix/suffix products of the per-player probabilities at state s.
class JointWeights {
 public:
  JointWeights(const JointActionSpace& space, const JointPolicy& policy, int s)
      : space_(space), digits_(space.num_players(), 0), rows_(space.num_players()),
        prefix_(space.num_players() + 1), suffix_(space.num_players() + 1) {
    for (int j = 0; j < space.num_players(); ++j) rows_[j] = policy.row(j, s).data();
    prefix_[0] = 1.0;
    refresh(0);
  }

  const std::vector<int>& digits() const { return digits_; }
  double joint() const { return prefix_.back(); }
  // Product over every player except i.
  double excluding(int i) const { return prefix_[i] * suffix_[i + 1]; }

  void advance() {
    int i = space_.num_players() - 1;
    for (; i >= 0; --i) {
      if (++digits_[i] < space_.count(i)) break;
      digits_[i] = 0;
    }
    refresh(i < 0 ? 0 : i);
  }

 private:
  // Digits before `from` are unchanged, so their prefix products are too.
  void refresh(int from) {
    const int n = space_.num_players();
    for (int j = from; j < n; ++j) prefix_[j + 1] = prefix_[j] * rows_[j][digits_[j]];
    suffix_[n] = 1.0;
    for (int j = n - 1; j >= 0; --j) suffix_[j] = rows_[j][digits_[j]] * suffix_[j + 1];
  }

  const JointActionSpace& space_;
  std::vector<int> digits_;
  std::vector<const double*> rows_;
  std::vector<double> prefix_, suffix_;
};

}  // namespace mpg::detail
