#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsol/numerics.hpp"
#include "qsol/toric.hpp"

namespace qsol {

/// Element of the Lie algebra of the compact torus, as a vector in R^n
/// (unused component zero).
using TorusVector = RealPoint;

/// F_p(xi) = p sum_a e^{<a,xi>/p} with its gradient and Hessian.
struct FpJet {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

FpJet f_p(const SectionBasis& basis, const TorusVector& xi);

/// Fut_p^xi(eta) = sum_a <a,eta> e^{<a,xi>/p}.
double quantized_futaki(const SectionBasis& basis, const TorusVector& xi, const TorusVector& eta);

struct SolitonSolveReport {
  TorusVector solution{};
  int iterations = 0;
  double gradient_norm = 0.0;     // absolute
  double relative_gradient = 0.0; // gradient norm over its natural scale
  double hessian_condition = 0.0;
};

/// Newton with Armijo backtracking (c = 1e-4, factor 0.5) on F_p. Stops when
/// |grad F_p| <= tol * sum_a |a| e^{<a,xi>/p}.
SolitonSolveReport solve_xi_p(const SectionBasis& basis, double tol, TorusVector start = {});

/// Newton on F(xi) = int_P e^{<u,xi>} du; stops when |M(xi)| <= tol * F(xi).
SolitonSolveReport solve_xi_infinity(const ReflexivePolytope& polytope, double tol,
                                     TorusVector start = {});

struct XiRow {
  int p = 0;
  TorusVector xi_p{};
  double gap = 0.0;  // |xi_p - xi_inf|
  int iterations = 0;
  std::string error;  // empty on success
};

struct XiAsymptotics {
  TorusVector xi_infinity{};
  std::vector<XiRow> rows;
  SlopeFit fit;  // log |xi_p - xi_inf| against log p
};

XiAsymptotics xi_asymptotics(const ReflexivePolytope& polytope, const std::vector<int>& p_list,
                             double tol);

}  // namespace qsol
