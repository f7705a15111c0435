#pragma once

#include <cmath>
#include <random>

#include "qsol/potential.hpp"
#include "qsol/toric.hpp"

namespace qsol::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(0x5eed);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline RealPoint random_vector(int n, double radius) {
  RealPoint v{uniform(-1, 1), n == 2 ? uniform(-1, 1) : 0.0};
  const double s = std::hypot(v[0], v[1]);
  const double r = uniform(0.1, radius);
  return {v[0] / s * r, v[1] / s * r};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

/// Level-2 Fubini-Study potential with random weights.
inline Potential random_potential(const ReflexivePolytope& polytope, double spread = 0.5) {
  const SectionBasis b = lattice_points(polytope, 2);
  std::vector<double> offsets(b.size());
  for (auto& o : offsets) o = uniform(-spread, spread);
  return Potential::log_sum_exp(polytope.dimension(), b.points, offsets, 2.0,
                                PotentialKind::fubini_study, "random");
}

}  // namespace qsol::testing
