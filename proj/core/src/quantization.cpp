#include "qsol/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"

namespace qsol {

const std::vector<DictionaryEntry>& coordinate_dictionary() {
  static const std::vector<DictionaryEntry> d = {
      {"section norm", "|s_a|^2_{h^p}(x) = exp(<a,x> - p phi(x))"},
      {"anticanonical volume", "dnu_h = (2 pi)^n exp(-phi(x)) dx"},
      {"weight action", "L_xi s_a = <a,xi> s_a"},
      {"holomorphy potential", "theta_h(xi)(x) = <grad phi(x), xi>"},
      {"torus flow", "time-t flow of xi acts as x -> x + 2 t xi"},
      {"twisted basis", "e^{L_xi/2p} s_a has log norm ell_a - <a,xi>/p; phi_FS -> phi_FS(x + xi/p)"},
      {"Kahler volume", "omega^n/n! = det Hess phi(x) dx"},
      {"Bergman leading term", "b0 = det Hess phi(x) exp(phi(x)) / (2 pi)^n"},
  };
  return d;
}

double log_two_pi_power(int dimension) { return dimension * std::log(2.0 * std::numbers::pi); }

InvariantProduct gram_from_nodes(std::span<const double> phi_nodes, const SectionBasis& basis,
                                 const QuadratureGrid& grid) {
  auto moments = exponential_moments(grid, basis, basis.level + 1.0, phi_nodes);
  InvariantProduct h{basis, {}};
  h.log_weights.reserve(moments.size());
  const double c = log_two_pi_power(basis.dimension);
  for (auto& m : moments) h.log_weights.push_back(c + m.log_value());
  validate_product(h);
  return h;
}

InvariantProduct gram(const Potential& phi, const SectionBasis& basis, const QuadratureGrid& grid) {
  return gram_from_nodes(phi.values(grid.points), basis, grid);
}

Potential fs_potential(const InvariantProduct& product) {
  validate_product(product);
  return Potential::log_sum_exp(product.dimension(), product.basis.points, product.log_weights,
                                product.level(), PotentialKind::fubini_study,
                                "fubini_study(p=" + std::to_string(product.level()) + ")");
}

double berezin_weights(const InvariantProduct& product, const RealPoint& x, std::span<double> w) {
  return softmax(product.basis.points, product.dimension(), product.log_weights, x, w);
}

double rawnsley(const InvariantProduct& product, const Potential& ambient, const RealPoint& x) {
  const int p = product.level();
  return std::exp(p * (fs_potential(product).value(x) - ambient.value(x)));
}

DiagonalObservable toeplitz_nodes(std::span<const double> f_nodes, const InvariantProduct& product,
                                  std::span<const double> phi_nodes, const QuadratureGrid& grid) {
  auto moments =
      exponential_moments(grid, product.basis, product.level() + 1.0, phi_nodes, f_nodes);
  DiagonalObservable t;
  t.values.resize(moments.size());
  const double c = log_two_pi_power(product.dimension());
  for (std::size_t a = 0; a < moments.size(); ++a) {
    t.values[a] = moments[a].sum * std::exp(moments[a].log_scale + c - product.log_weights[a]);
  }
  return t;
}

DiagonalObservable toeplitz(const std::function<double(const RealPoint&)>& f,
                            const InvariantProduct& product, const Potential& ambient,
                            const QuadratureGrid& grid) {
  std::vector<double> fv(grid.size());
  for (std::size_t q = 0; q < fv.size(); ++q) fv[q] = f(grid.points[q]);
  return toeplitz_nodes(fv, product, ambient.values(grid.points), grid);
}

double berezin_symbol(const DiagonalObservable& A, const InvariantProduct& product,
                      const RealPoint& x) {
  std::vector<double> w(product.size());
  berezin_weights(product, x, w);
  double s = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) s += A.values[a] * w[a];
  return s;
}

std::vector<double> berezin_transform(const std::function<double(const RealPoint&)>& f,
                                      const InvariantProduct& product, const Potential& ambient,
                                      const QuadratureGrid& grid, std::span<const RealPoint> xs) {
  const DiagonalObservable t = toeplitz(f, product, ambient, grid);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = berezin_symbol(t, product, xs[i]);
  return out;
}

InvariantProduct twist_product(const InvariantProduct& product, const RealPoint& xi) {
  InvariantProduct h = product;
  const double p = product.level();
  for (std::size_t a = 0; a < h.size(); ++a) {
    h.log_weights[a] -= product.basis.dot(a, xi.data()) / p;
  }
  return h;
}

double bergman_density(const Potential& phi, const RealPoint& x) {
  const PotentialJet j = phi.jet(x);
  return j.hessian_det(phi.dimension()) * std::exp(j.value - log_two_pi_power(phi.dimension()));
}

double log_volume_from_nodes(std::span<const double> phi_nodes, const QuadratureGrid& grid) {
  std::vector<double> neg(phi_nodes.size());
  for (std::size_t q = 0; q < neg.size(); ++q) neg[q] = -phi_nodes[q];
  return log_two_pi_power(grid.dimension) + integrate_log(grid, neg).log_value;
}

double log_volume(const Potential& phi, const QuadratureGrid& grid) {
  return log_volume_from_nodes(phi.values(grid.points), grid);
}

Potential reference_potential(const ReflexivePolytope& polytope) {
  if (polytope.dimension() == 1) return Potential::round_cp1();
  auto verts = polytope.integer_vertices();
  return Potential::log_sum_exp(polytope.dimension(), verts, std::vector<double>(verts.size(), 0.0),
                                1.0, PotentialKind::user_defined, "vertex_log_sum_exp");
}

InvariantProduct uniform_product(const SectionBasis& basis) {
  return InvariantProduct{basis, std::vector<double>(basis.size(), 0.0)};
}

std::string product_to_csv(const InvariantProduct& product) {
  std::ostringstream out;
  out << (product.dimension() == 2 ? "alpha_1,alpha_2,log_weight\n" : "alpha_1,log_weight\n");
  char buf[64];
  for (std::size_t a = 0; a < product.size(); ++a) {
    out << product.basis.points[a][0] << ',';
    if (product.dimension() == 2) out << product.basis.points[a][1] << ',';
    std::snprintf(buf, sizeof buf, "%.17g", product.log_weights[a]);
    out << buf << '\n';
  }
  return out.str();
}

InvariantProduct product_from_csv(const std::string& text, const SectionBasis& basis) {
  std::map<LatticePoint, std::size_t> index;
  for (std::size_t a = 0; a < basis.size(); ++a) index[basis.points[a]] = a;
  InvariantProduct h{basis, std::vector<double>(basis.size(), 0.0)};
  std::vector<char> seen(basis.size(), 0);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("alpha", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    LatticePoint a{0, 0};
    double w = 0.0;
    bool ok = static_cast<bool>(row >> a[0]);
    if (basis.dimension == 2) ok = ok && static_cast<bool>(row >> a[1]);
    ok = ok && static_cast<bool>(row >> w);
    if (!ok) throw ConfigError("weights file line " + std::to_string(line_no) + ": malformed row");
    auto it = index.find(a);
    if (it == index.end()) {
      throw ConfigError("weights file line " + std::to_string(line_no) +
                        ": exponent is not a lattice point of pP");
    }
    if (seen[it->second]) {
      throw ConfigError("weights file line " + std::to_string(line_no) + ": duplicate exponent");
    }
    seen[it->second] = 1;
    h.log_weights[it->second] = w;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ConfigError("weights file: missing exponents for the requested level");
  }
  validate_product(h);
  return h;
}

}  // namespace qsol
