#include "qsol/toric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qsol/errors.hpp"
#include "qsol/numerics.hpp"

namespace qsol {
namespace {

struct PresetSpec {
  const char* name;
  int dimension;
  std::vector<LatticePoint> rays;
};

const std::vector<PresetSpec>& presets() {
  static const std::vector<PresetSpec> table = {
      {"CP1", 1, {{1, 0}, {-1, 0}}},
      {"CP2", 2, {{1, 0}, {0, 1}, {-1, -1}}},
      {"CP1xCP1", 2, {{1, 0}, {0, 1}, {-1, 0}, {0, -1}}},
      {"dP8", 2, {{1, 0}, {1, 1}, {0, 1}, {-1, -1}}},
      {"dP7", 2, {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}}},
      {"dP6", 2, {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}}},
  };
  return table;
}

constexpr double kVertexTol = 1e-9;

}  // namespace

ReflexivePolytope::ReflexivePolytope(std::string name, int dimension,
                                     std::vector<LatticePoint> facet_normals)
    : name_(std::move(name)), dimension_(dimension), normals_(std::move(facet_normals)) {
  if (dimension_ != 1 && dimension_ != 2) {
    throw GeometryError("polytope " + name_ + ": dimension must be 1 or 2");
  }
  if (dimension_ == 1) {
    bool has_plus = false, has_minus = false;
    for (auto& v : normals_) {
      if (v[1] != 0) throw GeometryError("polytope " + name_ + ": 1D normals have one component");
      has_plus |= v[0] == 1;
      has_minus |= v[0] == -1;
    }
    if (normals_.size() != 2 || !has_plus || !has_minus) {
      throw GeometryError("polytope " + name_ + ": 1D reflexive polytope needs normals {+1,-1}");
    }
    normals_ = {{1, 0}, {-1, 0}};
    vertices_ = {{-1.0, 0.0}, {1.0, 0.0}};
    return;
  }

  for (auto& v : normals_) {
    if (std::gcd(v[0], v[1]) != 1) {
      throw GeometryError("polytope " + name_ + ": facet normal is not primitive");
    }
  }
  std::sort(normals_.begin(), normals_.end(), [](const LatticePoint& a, const LatticePoint& b) {
    return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
  });
  for (std::size_t i = 0; i + 1 < normals_.size(); ++i) {
    if (normals_[i] == normals_[i + 1]) {
      throw GeometryError("polytope " + name_ + ": repeated facet normal");
    }
  }
  const std::size_t k = normals_.size();
  if (k < 3) throw GeometryError("polytope " + name_ + ": unbounded (fewer than 3 facets)");
  // Bounded iff consecutive normals turn by less than pi.
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = normals_[i];
    const auto& b = normals_[(i + 1) % k];
    if (a[0] * b[1] - a[1] * b[0] <= 0) {
      throw GeometryError("polytope " + name_ + ": normals do not positively span the plane");
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = normals_[i];
    const auto& b = normals_[(i + 1) % k];
    const double det = a[0] * b[1] - a[1] * b[0];
    // <u,a> = -1, <u,b> = -1
    RealPoint u{(-b[1] + a[1]) / det, (b[0] - a[0]) / det};
    for (auto& v : normals_) {
      if (u[0] * v[0] + u[1] * v[1] < -1.0 - kVertexTol) {
        throw GeometryError("polytope " + name_ + ": redundant facet inequality");
      }
    }
    if (std::abs(u[0] - std::round(u[0])) > kVertexTol ||
        std::abs(u[1] - std::round(u[1])) > kVertexTol) {
      throw GeometryError("polytope " + name_ + ": vertex is not a lattice point (not reflexive)");
    }
    vertices_.push_back({std::round(u[0]), std::round(u[1])});
  }
}

std::vector<LatticePoint> ReflexivePolytope::integer_vertices() const {
  std::vector<LatticePoint> out;
  for (auto& v : vertices_) out.push_back({static_cast<int>(v[0]), static_cast<int>(v[1])});
  return out;
}

double ReflexivePolytope::volume() const {
  if (dimension_ == 1) return vertices_.back()[0] - vertices_.front()[0];
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % vertices_.size()];
    twice += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * twice;
}

bool ReflexivePolytope::contains(const LatticePoint& alpha, int scale) const {
  for (auto& v : normals_) {
    if (alpha[0] * v[0] + alpha[1] * v[1] < -scale) return false;
  }
  return true;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (auto& p : presets()) names.emplace_back(p.name);
  return names;
}

ReflexivePolytope load_preset(const std::string& name) {
  for (auto& p : presets()) {
    if (name == p.name) return ReflexivePolytope(p.name, p.dimension, p.rays);
  }
  std::string valid;
  for (auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw CatalogError("unknown manifold '" + name + "'; valid presets: " + valid);
}

std::string catalog_table() {
  std::ostringstream out;
  out << "# qsol preset catalog\n";
  out << "# P = { u : <u, v> >= -1 for every facet normal v }\n";
  out << "# name\tdim\tfacet_normals\tvertices\n";
  for (auto& name : preset_names()) {
    auto poly = load_preset(name);
    out << name << '\t' << poly.dimension() << '\t';
    bool first = true;
    for (auto& v : poly.facet_normals()) {
      out << (first ? "" : " ") << '(' << v[0];
      if (poly.dimension() == 2) out << ',' << v[1];
      out << ')';
      first = false;
    }
    out << '\t';
    first = true;
    for (auto& v : poly.integer_vertices()) {
      out << (first ? "" : " ") << '(' << v[0];
      if (poly.dimension() == 2) out << ',' << v[1];
      out << ')';
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

SectionBasis lattice_points(const ReflexivePolytope& polytope, int level) {
  if (level < 1) throw GeometryError("lattice_points: level must be >= 1");
  SectionBasis basis;
  basis.level = level;
  basis.dimension = polytope.dimension();
  int lo[2] = {0, 0}, hi[2] = {0, 0};
  for (auto& v : polytope.integer_vertices()) {
    for (int d = 0; d < basis.dimension; ++d) {
      lo[d] = std::min(lo[d], v[d] * level);
      hi[d] = std::max(hi[d], v[d] * level);
    }
  }
  for (int a = lo[0]; a <= hi[0]; ++a) {
    if (basis.dimension == 1) {
      if (polytope.contains({a, 0}, level)) basis.points.push_back({a, 0});
      continue;
    }
    for (int b = lo[1]; b <= hi[1]; ++b) {
      if (polytope.contains({a, b}, level)) basis.points.push_back({a, b});
    }
  }
  return basis;
}

PolytopeRule polytope_rule(const ReflexivePolytope& polytope, int order) {
  const GaussRule& g = gauss_legendre(order);
  PolytopeRule rule;
  const auto& verts = polytope.vertices();
  if (polytope.dimension() == 1) {
    // Two segments [a, 0] and [0, b].
    for (double end : {verts.front()[0], verts.back()[0]}) {
      const double len = std::abs(end);
      if (len < 1e-14) throw GeometryError("degenerate simplex in polytope decomposition");
      for (int i = 0; i < order; ++i) {
        double s = 0.5 * (g.nodes[i] + 1.0);
        rule.points.push_back({s * end, 0.0});
        rule.weights.push_back(0.5 * g.weights[i] * len);
      }
    }
    return rule;
  }
  const std::size_t k = verts.size();
  for (std::size_t t = 0; t < k; ++t) {
    const auto& a = verts[t];
    const auto& b = verts[(t + 1) % k];
    const double det = a[0] * b[1] - a[1] * b[0];
    if (std::abs(det) < 1e-14) throw GeometryError("degenerate simplex in polytope decomposition");
    // u = s * (a + r (b - a)), (s, r) in [0,1]^2, |J| = s |det|.
    for (int i = 0; i < order; ++i) {
      const double s = 0.5 * (g.nodes[i] + 1.0);
      for (int j = 0; j < order; ++j) {
        const double r = 0.5 * (g.nodes[j] + 1.0);
        rule.points.push_back({s * (a[0] + r * (b[0] - a[0])), s * (a[1] + r * (b[1] - a[1]))});
        rule.weights.push_back(0.25 * g.weights[i] * g.weights[j] * s * std::abs(det));
      }
    }
  }
  return rule;
}

namespace {

ExponentialMoments moments_with_rule(const PolytopeRule& rule, int n, const Eigen::VectorXd& xi) {
  ExponentialMoments m;
  m.first = Eigen::VectorXd::Zero(n);
  m.second = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& u = rule.points[q];
    double e = u[0] * xi[0];
    if (n == 2) e += u[1] * xi[1];
    const double w = rule.weights[q] * std::exp(e);
    m.value += w;
    for (int i = 0; i < n; ++i) {
      m.first[i] += w * u[i];
      for (int j = 0; j < n; ++j) m.second(i, j) += w * u[i] * u[j];
    }
  }
  return m;
}

double moment_difference(const ExponentialMoments& a, const ExponentialMoments& b) {
  double scale = std::abs(a.value);
  double diff = std::abs(a.value - b.value);
  diff = std::max(diff, (a.first - b.first).cwiseAbs().maxCoeff());
  diff = std::max(diff, (a.second - b.second).cwiseAbs().maxCoeff());
  return diff / scale;
}

}  // namespace

ExponentialMoments polytope_exponential_moments(const ReflexivePolytope& polytope,
                                                const Eigen::VectorXd& xi, double rel_tol) {
  const int n = polytope.dimension();
  if (xi.size() != n) throw GeometryError("polytope_exponential_moments: xi has wrong dimension");
  if (!xi.allFinite()) throw GeometryError("polytope_exponential_moments: xi is not finite");
  int order = 8;
  ExponentialMoments prev = moments_with_rule(polytope_rule(polytope, order), n, xi);
  for (;;) {
    order *= 2;
    ExponentialMoments next = moments_with_rule(polytope_rule(polytope, order), n, xi);
    if (moment_difference(next, prev) <= rel_tol || order >= 512) return next;
    prev = std::move(next);
  }
}

}  // namespace qsol
