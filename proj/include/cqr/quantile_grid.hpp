#pragma once

#include <stdexcept>

#include "cqr/numerics.hpp"

namespace cqr {

/// Equally spaced quantile levels tau_k = k / (K + 1), k = 1..K.
struct QuantileGrid {
  Vector levels;

  static QuantileGrid equally_spaced(int K) {
    if (K < 1) throw std::domain_error("QuantileGrid: need K >= 1");
    QuantileGrid grid;
    grid.levels.resize(K);
    for (int k = 1; k <= K; ++k) {
      grid.levels[k - 1] = static_cast<double>(k) / (K + 1);
    }
    return grid;
  }

  int size() const { return static_cast<int>(levels.size()); }
};

}  // namespace cqr
