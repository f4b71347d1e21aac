#pragma once

// A step cocycle on the circle: phi(x) = Phi(floor(Q x)) for a map
// Phi : Z_Q -> Z^d with sum_eps Phi(eps) = 0 (zero mean).  The centering is
// validated at construction; everything downstream (displacement vanishing
// on the constant sector, lattice adaptedness) depends on it.

#include <vector>

#include "numeric.hpp"

namespace renorm {

struct StepCocycle {
  int Q = 0;
  int d = 0;
  std::vector<Vec> values;  // Phi(0), ..., Phi(Q-1)

  StepCocycle() = default;
  StepCocycle(int Q_, std::vector<Vec> vals) : Q(Q_), values(std::move(vals)) {
    if (Q < 1) throw config_error("cocycle: Q must be >= 1");
    if (static_cast<int>(values.size()) != Q)
      throw config_error("cocycle: expected exactly Q values");
    d = values[0].dim;
    if (d < 1 || d > kMaxDim) throw config_error("cocycle: dimension must be 1..3");
    Vec sum(d);
    for (const Vec& v : values) {
      if (v.dim != d) throw config_error("cocycle: inconsistent value dimensions");
      sum += v;
    }
    if (!sum.is_zero())
      throw config_error("cocycle: values must sum to zero (got " + sum.str() + ")");
  }

  const Vec& operator()(int eps) const { return values[static_cast<size_t>(eps)]; }

  /// Total variation of phi over the circle in the sup norm:
  /// sum_{l=0}^{Q-1} max_i |Phi_i(l) - Phi_i(l-1 mod Q)| (the l=0 term is the
  /// wrap-around jump at 0, part of the variation on T).
  std::int64_t variation_inf() const {
    std::int64_t tv = 0;
    for (int l = 0; l < Q; ++l)
      tv += (values[static_cast<size_t>(l)] - values[static_cast<size_t>((l + Q - 1) % Q)])
                .norm_inf();
    return tv;
  }

  /// Per-coordinate total variation over the circle.
  Vec variation_per_coord() const {
    Vec tv(d);
    for (int l = 0; l < Q; ++l) {
      Vec diff =
          values[static_cast<size_t>(l)] - values[static_cast<size_t>((l + Q - 1) % Q)];
      for (int i = 0; i < d; ++i) tv[i] += diff[i] < 0 ? -diff[i] : diff[i];
    }
    return tv;
  }
};

}  // namespace renorm
