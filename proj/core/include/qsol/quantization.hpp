#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsol/potential.hpp"
#include "qsol/quadrature.hpp"
#include "qsol/toric.hpp"

namespace qsol {

/// Torus-commuting Hermitian operator on H^0(X, L^p): a real vector indexed
/// by the basis.
struct DiagonalObservable {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
};

/// Fixed conventions linking toric log-coordinates to the geometric objects.
struct DictionaryEntry {
  std::string object;
  std::string formula;
};
const std::vector<DictionaryEntry>& coordinate_dictionary();

/// log (2 pi)^n.
double log_two_pi_power(int dimension);

/// ell_a = log[(2 pi)^n int exp(<a, x> - (p+1) phi(x)) dx].
InvariantProduct gram(const Potential& phi, const SectionBasis& basis, const QuadratureGrid& grid);
/// Same, with phi already evaluated at the grid nodes.
InvariantProduct gram_from_nodes(std::span<const double> phi_nodes, const SectionBasis& basis,
                                 const QuadratureGrid& grid);

/// phi_FS(x) = (1/p) log sum_a exp(<a, x> - ell_a).
Potential fs_potential(const InvariantProduct& product);

/// Softmax weights w_a(x) of the product; returns p * phi_FS(x).
double berezin_weights(const InvariantProduct& product, const RealPoint& x, std::span<double> w);

/// rho(x) = exp(p (phi_FS,H(x) - phi(x))).
double rawnsley(const InvariantProduct& product, const Potential& ambient, const RealPoint& x);

/// T(f)_a = e^{-ell_a} (2 pi)^n int f exp(<a, x> - (p+1) phi) dx, f given at
/// the grid nodes (any sign).
DiagonalObservable toeplitz_nodes(std::span<const double> f_nodes, const InvariantProduct& product,
                                  std::span<const double> phi_nodes, const QuadratureGrid& grid);
DiagonalObservable toeplitz(const std::function<double(const RealPoint&)>& f,
                            const InvariantProduct& product, const Potential& ambient,
                            const QuadratureGrid& grid);

/// sigma(A)(x) = sum_a A_a w_a(x).
double berezin_symbol(const DiagonalObservable& A, const InvariantProduct& product,
                      const RealPoint& x);

/// B(f)(x) = sigma(T(f))(x) at each point of xs.
std::vector<double> berezin_transform(const std::function<double(const RealPoint&)>& f,
                                      const InvariantProduct& product, const Potential& ambient,
                                      const QuadratureGrid& grid, std::span<const RealPoint> xs);

/// ell'_a = ell_a - <a, xi>/p, so fs_potential(H')(x) = fs_potential(H)(x + xi/p).
InvariantProduct twist_product(const InvariantProduct& product, const RealPoint& xi);

/// Leading Bergman density: (omega^n/n!) / dnu = det Hess(phi) e^{phi} / (2 pi)^n.
double bergman_density(const Potential& phi, const RealPoint& x);

/// log Vol(dnu_phi) = log[(2 pi)^n int e^{-phi} dx].
double log_volume(const Potential& phi, const QuadratureGrid& grid);
double log_volume_from_nodes(std::span<const double> phi_nodes, const QuadratureGrid& grid);

/// Initial metric for a preset: round for CP1, log sum_{vertices} e^{<v,x>}
/// otherwise.
Potential reference_potential(const ReflexivePolytope& polytope);

InvariantProduct uniform_product(const SectionBasis& basis);

/// CSV with columns alpha_1[,alpha_2],log_weight; values written with 17
/// significant digits.
std::string product_to_csv(const InvariantProduct& product);
/// Parses the CSV; every basis point must appear exactly once.
InvariantProduct product_from_csv(const std::string& text, const SectionBasis& basis);

}  // namespace qsol
