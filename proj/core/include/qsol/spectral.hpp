#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsol/balance.hpp"
#include "qsol/numerics.hpp"
#include "qsol/potential.hpp"
#include "qsol/quadrature.hpp"
#include "qsol/quantization.hpp"

namespace qsol {

/// Berezin-Toeplitz channel restricted to diagonal observables:
/// E_ab = e^{-ell_a} (2 pi)^n int w_b(x + xi/p) exp(<a,x> - (p+1) phi(x)) dx.
struct ChannelMatrix {
  Eigen::MatrixXd matrix;
  std::vector<double> d;           // twisted inner-product weights e^{<a,xi>/p}
  double unitality_defect = 0.0;   // max |E 1 - 1|
  double symmetry_defect = 0.0;    // max |S - S^T| / max |S|, S = D^{1/2} E D^{-1/2}
};

ChannelMatrix channel_matrix(const InvariantProduct& product, const Potential& ambient,
                             const TorusVector& xi, const QuadratureGrid& grid);

struct ChannelSpectrum {
  std::vector<double> eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors;     // column k is A_k with E A_k = gamma_k A_k
};

/// Dense symmetric eigensolve of D^{1/2} E D^{-1/2}. Throws ConventionsError
/// when the symmetry defect exceeds 100 * quad_tol.
ChannelSpectrum channel_spectrum(const ChannelMatrix& channel, double quad_tol);

/// sup |B_xi f - gamma f| / sup |f| over the grid for f = sigma(A_k)(x + xi/p),
/// where B_xi f = sigma(T f)(x + xi/p).
double eigenfunction_defect(const ChannelSpectrum& spectrum, int k,
                            const InvariantProduct& product, const Potential& ambient,
                            const TorusVector& xi, const QuadratureGrid& grid);

struct TzSpectrum {
  std::vector<double> eigenvalues;  // ascending, lambda_0 ~ 0
  int degree = 0;
  double lambda1_change = 0.0;  // |lambda_1(degree) - lambda_1(degree - 2)|
  bool resolved = false;        // lambda1_change < 1e-4
};

/// Galerkin eigenvalues of the weighted Laplacian with quadratic form
/// int <df, df> e^{theta(xi)} omega^n/n!, written in moment coordinates
/// u = grad phi(x) on P: int_P <grad_u f, Hess phi(x(u)) grad_u f> e^{<u,xi>} du
/// against the mass int_P f^2 e^{<u,xi>} du. Trial space: polynomials of
/// total degree <= degree (Legendre products on the bounding box of P).
TzSpectrum tz_spectrum(const Potential& phi, const ReflexivePolytope& polytope,
                       const TorusVector& xi, int k_max, int degree);

enum class XiPolicy { zero, xi_p };

struct GapOptions {
  QuadratureOptions quadrature;
  double flow_tol = 1e-9;
  int flow_max_iterations = 500;
  double solver_tol = 1e-12;
  int k_max = 3;
  int tz_degree = 10;
};

struct GapRow {
  int p = 0;
  TorusVector xi{};
  std::vector<double> gamma;
  std::vector<double> lambda;
  std::vector<double> defect;  // |1 - gamma_k - lambda_k / p|
  double unitality_defect = 0.0;
  double symmetry_defect = 0.0;
  bool tz_resolved = false;
  std::string metric;  // how the metric at level p was obtained
  std::string error;
};

struct GapReport {
  std::vector<GapRow> rows;
  std::vector<SlopeFit> slopes;  // per k, log defect against log p
};

/// CP1 with xi = 0 uses the round metric (it is balanced at every level);
/// otherwise the relative balanced metric from the T-iteration is used.
GapReport gap_report(const std::string& manifold, XiPolicy policy, const std::vector<int>& p_list,
                     const GapOptions& options = {});

}  // namespace qsol
