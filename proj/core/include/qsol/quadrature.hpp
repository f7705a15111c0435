#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "qsol/potential.hpp"
#include "qsol/toric.hpp"

namespace qsol {

struct QuadratureOptions {
  double tol = 1e-10;       // relative agreement of successive orders
  int max_order = 1 << 14;  // node cap per axis
  double mass_cut = 46.0;   // boundary integrand <= e^{-mass_cut} * maximum
  double margin = 0.0;      // grid must also cover translates by |delta| <= margin
  int initial_order = 32;
  double map_scale = 2.0;   // sinh stretch of the per-axis rule
};

/// Quadrature rule on R^n stored as flattened nodes and log weights.
///
/// Box grids are tensor Gauss-Legendre rules on [lower, upper]. Fan grids
/// split R^n into the cones spanned by consecutive outward facet normals w_i
/// of P and integrate each cone x = s w_i + t w_{i+1}, 0 <= s, t <= extent,
/// with a tensor rule. Per axis the rule lives in [-1, 1] (box) or [0, 1]
/// (cone) and is stretched by x = a sinh(b sigma), a = map_scale, so nodes
/// cluster at the centre or at the cone walls where the integrands vary.
struct QuadratureGrid {
  int dimension = 1;
  int order = 0;
  double map_scale = 0.0;
  double error_estimate = 0.0;
  std::array<double, 2> lower{};  // bounding box of the covered region
  std::array<double, 2> upper{};
  std::vector<RealPoint> generators;  // fan grids only
  double extent = 0.0;                // fan grids only
  std::vector<RealPoint> points;
  std::vector<double> log_weights;

  std::size_t size() const { return points.size(); }

  /// map_scale <= 0 gives plain affine Gauss-Legendre nodes.
  static QuadratureGrid box(int dimension, std::array<double, 2> lower,
                            std::array<double, 2> upper, int order, double map_scale = 0.0);
  static QuadratureGrid fan(int dimension, std::vector<RealPoint> generators, double extent,
                            int order, double map_scale);
};

/// Outward facet normals of P in counter-clockwise order.
std::vector<RealPoint> fan_generators(const ReflexivePolytope& polytope);

/// Fan grid whose extent makes exp(<a,x> - (p+1) phi) (a in the basis) and
/// exp(-phi) drop below e^{-mass_cut} of their maxima on the outer boundary,
/// with the order doubled until the log-moments of all those integrands agree
/// to tol. Throws RefinementError when the node cap is hit.
QuadratureGrid build_grid(const Potential& phi, const ReflexivePolytope& polytope,
                          const SectionBasis& basis, const QuadratureOptions& options = {});

struct LogIntegral {
  double log_value = 0.0;
  double value = 0.0;
};

/// log int exp(log_f) over the grid with a max shift and a fixed pairwise
/// reduction tree. All -inf input gives log_value = -inf.
LogIntegral integrate_log(const QuadratureGrid& grid, std::span<const double> log_f);
LogIntegral integrate_log(const QuadratureGrid& grid,
                          const std::function<double(const RealPoint&)>& log_f);

/// Integral represented as exp(log_scale) * sum; sum carries the sign.
struct ScaledIntegral {
  double log_scale = 0.0;
  double sum = 0.0;
  double log_value() const;
  double value() const;
};

/// For every basis exponent a: int f(x) exp(<a, x> - c phi(x)) dx, with
/// phi and (optional) f given at the grid nodes. Parallel over a.
std::vector<ScaledIntegral> exponential_moments(const QuadratureGrid& grid,
                                                const SectionBasis& basis, double c,
                                                std::span<const double> phi_nodes,
                                                std::span<const double> f_nodes = {});

}  // namespace qsol
