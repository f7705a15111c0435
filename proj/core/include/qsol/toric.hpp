#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qsol {

/// Integer point of Z^n, n in {1, 2}; unused components are zero.
using LatticePoint = std::array<int, 2>;
/// Real point of R^n, n in {1, 2}; unused components are zero.
using RealPoint = std::array<double, 2>;

/// Anticanonical moment polytope P = { u : <u, v_i> >= -1 } of a toric Fano
/// manifold of dimension 1 or 2. Immutable after construction.
class ReflexivePolytope {
 public:
  /// Validates the normals (primitive, distinct, positively spanning) and
  /// derives the vertices. Throws GeometryError unless P is reflexive.
  ReflexivePolytope(std::string name, int dimension, std::vector<LatticePoint> facet_normals);

  const std::string& name() const { return name_; }
  int dimension() const { return dimension_; }
  /// Normals in counter-clockwise order (n = 2) or {+1, -1} (n = 1).
  const std::vector<LatticePoint>& facet_normals() const { return normals_; }
  /// Vertices in counter-clockwise order (n = 2) or ascending (n = 1).
  const std::vector<RealPoint>& vertices() const { return vertices_; }
  std::vector<LatticePoint> integer_vertices() const;

  /// Lebesgue measure of P.
  double volume() const;
  /// True when <u, v_i> >= -scale for every facet (closed polytope scale*P).
  bool contains(const LatticePoint& alpha, int scale) const;

 private:
  std::string name_;
  int dimension_;
  std::vector<LatticePoint> normals_;
  std::vector<RealPoint> vertices_;
};

std::vector<std::string> preset_names();

/// Standard presets: CP1, CP2, CP1xCP1, dP8 (Bl1 CP2), dP7 (Bl2 CP2),
/// dP6 (Bl3 CP2). Throws CatalogError for anything else.
ReflexivePolytope load_preset(const std::string& name);

/// Tab-separated catalog: name, dimension, facet normals, vertices.
std::string catalog_table();

/// Monomial basis of H^0(X, L^p): the lattice points of pP.
struct SectionBasis {
  int level = 0;
  int dimension = 0;
  std::vector<LatticePoint> points;  // lexicographic order

  std::size_t size() const { return points.size(); }
  double dot(std::size_t i, const double* v) const {
    double s = points[i][0] * v[0];
    if (dimension == 2) s += points[i][1] * v[1];
    return s;
  }
};

SectionBasis lattice_points(const ReflexivePolytope& polytope, int level);

/// Quadrature rule on P: simplices coned from the origin, each mapped from
/// [0,1]^n (Duffy map for triangles) with a tensor Gauss-Legendre rule.
struct PolytopeRule {
  std::vector<RealPoint> points;
  std::vector<double> weights;
};

PolytopeRule polytope_rule(const ReflexivePolytope& polytope, int order);

/// Exponential moments of the polytope: value = int_P e^{<u,xi>} du,
/// first = int_P u e^{<u,xi>} du, second = int_P u u^T e^{<u,xi>} du.
struct ExponentialMoments {
  double value = 0.0;
  Eigen::VectorXd first;
  Eigen::MatrixXd second;
};

/// Cones P from the origin into simplices and integrates each with a
/// tensor Gauss-Legendre rule (Duffy map for triangles), doubling the order
/// until successive estimates agree to rel_tol.
ExponentialMoments polytope_exponential_moments(const ReflexivePolytope& polytope,
                                                const Eigen::VectorXd& xi,
                                                double rel_tol = 1e-12);

}  // namespace qsol
