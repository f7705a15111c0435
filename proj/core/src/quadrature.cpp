#include "qsol/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qsol/errors.hpp"
#include "qsol/numerics.hpp"
#include "qsol/parallel.hpp"

namespace qsol {
namespace {

constexpr double kSkip = 50.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

// One integrand exp(<a, x> - c phi(x)) of the family used to size the box.
struct Bump {
  RealPoint a{};
  double c = 1.0;
};

double bump_log(const Bump& b, const Potential& phi, const RealPoint& x, int n) {
  double t = b.a[0] * x[0] - b.c * phi.value(x);
  if (n == 2) t += b.a[1] * x[1];
  return t;
}

// Maximum over [lo, hi] of a concave function by golden-section search.
double concave_max(const std::function<double(double)>& f, double lo, double hi) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && b - a > 1e-9 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return std::max({f1, f2, f(lo), f(hi)});
}

struct Cone {
  RealPoint a{}, b{};  // generators (b unused when n = 1)
  double inv_norm = 1.0;  // infinity norm of the inverse coordinate map
};

std::vector<Cone> cones_of(int n, const std::vector<RealPoint>& gens) {
  std::vector<Cone> out;
  if (n == 1) {
    for (auto& w : gens) out.push_back({w, {0.0, 0.0}, 1.0 / std::abs(w[0])});
    return out;
  }
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const RealPoint& a = gens[i];
    const RealPoint& b = gens[(i + 1) % gens.size()];
    const double det = a[0] * b[1] - a[1] * b[0];
    if (!(det > 0.0)) throw GeometryError("fan grid: generators are not in counter-clockwise order");
    const double inv = std::max(std::abs(b[1]) + std::abs(b[0]), std::abs(a[1]) + std::abs(a[0]));
    out.push_back({a, b, inv / det});
  }
  return out;
}

// Cone coordinates (s, t) of x in the cone spanned by a and b.
std::array<double, 2> cone_coords(const Cone& c, const RealPoint& x) {
  const double det = c.a[0] * c.b[1] - c.a[1] * c.b[0];
  return {(x[0] * c.b[1] - x[1] * c.b[0]) / det, (c.a[0] * x[1] - c.a[1] * x[0]) / det};
}

// Largest value of the bump on the outer boundary of the truncated fan.
double boundary_max(const Bump& bump, const Potential& phi, int n, const std::vector<Cone>& cones,
                    double S) {
  double m = -kInf;
  for (auto& c : cones) {
    if (n == 1) {
      m = std::max(m, bump_log(bump, phi, {S * c.a[0], 0.0}, 1));
      continue;
    }
    auto on_s = [&](double t) {
      return bump_log(bump, phi, {S * c.a[0] + t * c.b[0], S * c.a[1] + t * c.b[1]}, 2);
    };
    auto on_t = [&](double s) {
      return bump_log(bump, phi, {s * c.a[0] + S * c.b[0], s * c.a[1] + S * c.b[1]}, 2);
    };
    m = std::max({m, concave_max(on_s, 0.0, S), concave_max(on_t, 0.0, S)});
  }
  return m;
}

// Stretched Gauss-Legendre rule on [0, S].
void half_line_rule(int order, double S, double map_scale, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  const GaussRule& rule = gauss_legendre(order);
  nodes.clear();
  weights.clear();
  for (int i = 0; i < order; ++i) {
    const double sigma = 0.5 * (rule.nodes[i] + 1.0);
    const double w = 0.5 * rule.weights[i];
    if (map_scale > 0.0) {
      const double b = std::asinh(S / map_scale);
      nodes.push_back(map_scale * std::sinh(b * sigma));
      weights.push_back(w * map_scale * b * std::cosh(b * sigma));
    } else {
      nodes.push_back(S * sigma);
      weights.push_back(w * S);
    }
  }
}

std::vector<double> family_log_integrals(const QuadratureGrid& grid, const SectionBasis& basis,
                                         const Potential& phi) {
  const std::vector<double> phi_nodes = phi.values(grid.points);
  std::vector<ScaledIntegral> moments =
      exponential_moments(grid, basis, basis.level + 1.0, phi_nodes);
  std::vector<double> out;
  out.reserve(moments.size() + 1);
  for (auto& m : moments) out.push_back(m.log_value());
  std::vector<double> neg(phi_nodes.size());
  for (std::size_t q = 0; q < neg.size(); ++q) neg[q] = -phi_nodes[q];
  out.push_back(integrate_log(grid, neg).log_value);
  return out;
}

}  // namespace

QuadratureGrid QuadratureGrid::box(int dimension, std::array<double, 2> lower,
                                   std::array<double, 2> upper, int order, double map_scale) {
  if (dimension != 1 && dimension != 2) throw GeometryError("quadrature: dimension must be 1 or 2");
  if (order < 1) throw GeometryError("quadrature: order must be positive");
  QuadratureGrid g;
  g.dimension = dimension;
  g.lower = lower;
  g.upper = upper;
  g.order = order;
  g.map_scale = map_scale;
  const GaussRule& rule = gauss_legendre(order);
  std::array<std::vector<double>, 2> axis_nodes, axis_weights;
  for (int d = 0; d < dimension; ++d) {
    if (!(upper[d] > lower[d]) || !std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
      throw GeometryError("quadrature: box must be finite and non-empty");
    }
    const double half = 0.5 * (upper[d] - lower[d]);
    const double mid = 0.5 * (upper[d] + lower[d]);
    if (map_scale > 0.0) {
      const double b = std::asinh(half / map_scale);
      for (int i = 0; i < order; ++i) {
        const double s = b * rule.nodes[i];
        axis_nodes[d].push_back(mid + map_scale * std::sinh(s));
        axis_weights[d].push_back(rule.weights[i] * map_scale * b * std::cosh(s));
      }
    } else {
      for (int i = 0; i < order; ++i) {
        axis_nodes[d].push_back(mid + half * rule.nodes[i]);
        axis_weights[d].push_back(half * rule.weights[i]);
      }
    }
  }
  if (dimension == 1) {
    for (int i = 0; i < order; ++i) {
      g.points.push_back({axis_nodes[0][i], 0.0});
      g.log_weights.push_back(std::log(axis_weights[0][i]));
    }
  } else {
    g.points.reserve(static_cast<std::size_t>(order) * order);
    for (int i = 0; i < order; ++i) {
      for (int j = 0; j < order; ++j) {
        g.points.push_back({axis_nodes[0][i], axis_nodes[1][j]});
        g.log_weights.push_back(std::log(axis_weights[0][i]) + std::log(axis_weights[1][j]));
      }
    }
  }
  return g;
}

QuadratureGrid QuadratureGrid::fan(int dimension, std::vector<RealPoint> generators,
                                   double extent, int order, double map_scale) {
  if (dimension != 1 && dimension != 2) throw GeometryError("quadrature: dimension must be 1 or 2");
  if (order < 1) throw GeometryError("quadrature: order must be positive");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw GeometryError("quadrature: bad fan extent");
  QuadratureGrid g;
  g.dimension = dimension;
  g.order = order;
  g.map_scale = map_scale;
  g.extent = extent;
  g.generators = std::move(generators);
  const std::vector<Cone> cones = cones_of(dimension, g.generators);
  std::vector<double> nodes, weights;
  half_line_rule(order, extent, map_scale, nodes, weights);
  g.lower = {kInf, dimension == 2 ? kInf : 0.0};
  g.upper = {-kInf, dimension == 2 ? -kInf : 0.0};
  for (auto& w : g.generators) {
    for (int d = 0; d < dimension; ++d) {
      g.lower[d] = std::min(g.lower[d], std::min(0.0, extent * w[d]));
      g.upper[d] = std::max(g.upper[d], std::max(0.0, extent * w[d]));
    }
  }
  for (auto& c : cones) {
    if (dimension == 1) {
      for (int i = 0; i < order; ++i) {
        g.points.push_back({nodes[i] * c.a[0], 0.0});
        g.log_weights.push_back(std::log(weights[i] * std::abs(c.a[0])));
      }
      continue;
    }
    const double log_det = std::log(c.a[0] * c.b[1] - c.a[1] * c.b[0]);
    for (int i = 0; i < order; ++i) {
      for (int j = 0; j < order; ++j) {
        g.points.push_back({nodes[i] * c.a[0] + nodes[j] * c.b[0],
                            nodes[i] * c.a[1] + nodes[j] * c.b[1]});
        g.log_weights.push_back(std::log(weights[i]) + std::log(weights[j]) + log_det);
      }
    }
  }
  return g;
}

std::vector<RealPoint> fan_generators(const ReflexivePolytope& polytope) {
  std::vector<RealPoint> out;
  for (auto& v : polytope.facet_normals()) out.push_back({-double(v[0]), -double(v[1])});
  return out;
}

QuadratureGrid build_grid(const Potential& phi, const ReflexivePolytope& polytope,
                          const SectionBasis& basis, const QuadratureOptions& options) {
  const int n = basis.dimension;
  if (phi.dimension() != n || polytope.dimension() != n) {
    throw GeometryError("build_grid: potential, polytope and basis dimensions differ");
  }
  if (!(options.tol > 0.0)) throw ConfigError("quad.tol must be positive");
  const std::vector<RealPoint> gens = fan_generators(polytope);
  const std::vector<Cone> cones = cones_of(n, gens);

  std::vector<Bump> family;
  for (auto& a : basis.points) family.push_back({{double(a[0]), double(a[1])}, basis.level + 1.0});
  family.push_back({{0.0, 0.0}, 1.0});

  std::vector<double> peak_value(family.size());
  std::vector<double> peak_extent(family.size());
  parallel_for(family.size(), [&](std::size_t k) {
    const RealPoint x = legendre_argmax(phi, family[k].a, family[k].c);
    peak_value[k] = bump_log(family[k], phi, x, n);
    double r = 0.0;
    for (auto& c : cones) {
      if (n == 1) {
        if (x[0] * c.a[0] >= 0.0) r = std::max(r, x[0] / c.a[0]);
        continue;
      }
      auto st = cone_coords(c, x);
      if (st[0] >= -1e-12 && st[1] >= -1e-12) r = std::max({r, st[0], st[1]});
    }
    peak_extent[k] = r;
  });

  double S = 8.0;
  for (double r : peak_extent) S = std::max(S, r + 4.0);
  for (;;) {
    std::vector<char> ok(family.size());
    parallel_for(family.size(), [&](std::size_t k) {
      ok[k] = boundary_max(family[k], phi, n, cones, S) <= peak_value[k] - options.mass_cut;
    });
    if (std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; })) break;
    S *= 1.25;
    if (S > 1e4) throw GeometryError("build_grid: integrands do not decay; potential is not proper");
  }
  double inv = 0.0;
  for (auto& c : cones) inv = std::max(inv, c.inv_norm);
  S += 1.0 + options.margin * inv;

  int m = std::max(2, options.initial_order);
  QuadratureGrid coarse = QuadratureGrid::fan(n, gens, S, m, options.map_scale);
  std::vector<double> prev = family_log_integrals(coarse, basis, phi);
  double err = kInf;
  while (2 * m <= options.max_order) {
    QuadratureGrid fine = QuadratureGrid::fan(n, gens, S, 2 * m, options.map_scale);
    std::vector<double> next = family_log_integrals(fine, basis, phi);
    err = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      err = std::max(err, std::abs(std::expm1(next[k] - prev[k])));
    }
    if (!std::isfinite(err)) err = kInf;
    if (err <= options.tol) {
      coarse.error_estimate = err;
      return coarse;
    }
    coarse = std::move(fine);
    prev = std::move(next);
    m *= 2;
  }
  throw RefinementError("quadrature: tolerance " + std::to_string(options.tol) +
                            " not reached within " + std::to_string(options.max_order) +
                            " nodes per axis",
                        err);
}

LogIntegral integrate_log(const QuadratureGrid& grid, std::span<const double> log_f) {
  const std::size_t N = grid.size();
  std::vector<double> t(N);
  double m = -kInf;
  for (std::size_t q = 0; q < N; ++q) {
    t[q] = grid.log_weights[q] + log_f[q];
    if (t[q] > m) m = t[q];
  }
  if (m == -kInf) return {-kInf, 0.0};
  for (std::size_t q = 0; q < N; ++q) {
    const double d = t[q] - m;
    t[q] = d > -kSkip ? std::exp(d) : 0.0;
  }
  LogIntegral out;
  out.log_value = m + std::log(pairwise_sum(t));
  out.value = std::exp(out.log_value);
  return out;
}

LogIntegral integrate_log(const QuadratureGrid& grid,
                          const std::function<double(const RealPoint&)>& log_f) {
  std::vector<double> v(grid.size());
  for (std::size_t q = 0; q < v.size(); ++q) v[q] = log_f(grid.points[q]);
  return integrate_log(grid, v);
}

double ScaledIntegral::log_value() const { return log_scale + std::log(sum); }
double ScaledIntegral::value() const { return sum * std::exp(log_scale); }

std::vector<ScaledIntegral> exponential_moments(const QuadratureGrid& grid,
                                                const SectionBasis& basis, double c,
                                                std::span<const double> phi_nodes,
                                                std::span<const double> f_nodes) {
  const std::size_t N = grid.size();
  const bool weighted = !f_nodes.empty();
  std::vector<ScaledIntegral> out(basis.size());
  parallel_for(basis.size(), [&](std::size_t k) {
    const double a0 = basis.points[k][0];
    const double a1 = basis.dimension == 2 ? basis.points[k][1] : 0.0;
    std::vector<double> t(N);
    double m = -kInf;
    for (std::size_t q = 0; q < N; ++q) {
      const RealPoint& x = grid.points[q];
      t[q] = grid.log_weights[q] + a0 * x[0] + a1 * x[1] - c * phi_nodes[q];
      if (t[q] > m) m = t[q];
    }
    for (std::size_t q = 0; q < N; ++q) {
      const double d = t[q] - m;
      double e = d > -kSkip ? std::exp(d) : 0.0;
      if (weighted) e *= f_nodes[q];
      t[q] = e;
    }
    out[k] = {m, pairwise_sum(t)};
  });
  return out;
}

}  // namespace qsol
