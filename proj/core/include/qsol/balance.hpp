#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsol/potential.hpp"
#include "qsol/quadrature.hpp"
#include "qsol/quantization.hpp"
#include "qsol/soliton_fields.hpp"

namespace qsol {

/// d_a = e^{<a,xi>/p}, the weights of the twisted trace Tr[e^{L_xi/p} . ].
std::vector<double> twist_weights(const SectionBasis& basis, const TorusVector& xi);
/// log Tr[e^{L_xi/p}].
double log_twisted_trace(const SectionBasis& basis, const TorusVector& xi);

/// mu_a = G_a - Vol/Tr with G_a = e^{-ell_a} (2 pi)^n int exp(<a,x> - (p+1) phi_FS,H(x + xi/p)) dx.
DiagonalObservable moment_map(const InvariantProduct& product, const TorusVector& xi,
                              const QuadratureGrid& grid);

/// ell'_a = ell_a + log G_a + log(Tr/Vol).
InvariantProduct t_step(const InvariantProduct& product, const TorusVector& xi,
                        const QuadratureGrid& grid);

/// sup over grid nodes of |sigma(e^{L_xi/p}) rho Vol/Tr - 1| for the metric
/// phi_FS,H(x + xi/p), which is the candidate relative balanced metric.
double balanced_residual(const InvariantProduct& product, const TorusVector& xi,
                         const QuadratureGrid& grid);

/// Psi(H) = -log Vol(dnu_FS,H) + (1/p) sum_a d_a (ell_a - ref_a) / Tr.
/// Invariant under ell -> ell + c.
double energy(const InvariantProduct& product, const TorusVector& xi, const QuadratureGrid& grid,
              const InvariantProduct& reference);

/// phi_FS,H(x + xi/p): the metric a relative balanced product describes.
Potential balanced_potential(const InvariantProduct& product, const TorusVector& xi);

enum class FlowMode { t_iteration, gradient_flow };
enum class InitialProduct { gram_of_reference_potential, uniform_weights, file };

struct BalanceConfig {
  std::string manifold = "CP1";
  int p = 2;
  TorusVector xi{};
  FlowMode mode = FlowMode::t_iteration;
  double tolerance = 1e-9;
  int max_iterations = 500;
  InitialProduct initial = InitialProduct::gram_of_reference_potential;
  std::optional<InvariantProduct> initial_product;  // used when initial == file
  QuadratureOptions quadrature;
  double initial_dt = 0.0;  // gradient flow; <= 0 selects 0.25 Tr/Vol
  double max_dt = 0.0;      // gradient flow; <= 0 selects 0.5 Tr/Vol
};

/// Path of the flow. Histories are indexed by accepted state; entry 0 is the
/// initial product.
struct FlowState {
  InvariantProduct product;  // best state (smallest residual)
  InvariantProduct reference;
  QuadratureGrid grid;
  int iterations = 0;  // accepted steps
  int rejected_steps = 0;
  int regrids = 0;
  bool converged = false;
  std::vector<double> residuals;
  std::vector<double> energies;
  std::vector<double> steps;        // dt (flow) or damping (T-iteration); 0 for entry 0
  std::vector<double> dissipation;  // (2 / (p Vol)) sum_a d_a mu_a^2
  std::vector<int> segment;         // grid generation of each entry
};

/// Relative floating-point resolution used to compare energies.
double energy_resolution(double psi);

FlowState run_flow(const BalanceConfig& config);

struct SolitonResidual {
  double variance = 0.0;
  double oscillation = 0.0;  // sup - inf
};

/// r = log(dnu density) - theta(xi) - log(omega^n/n! density), with variance
/// and oscillation against dnu/Vol over the nodes carrying relative mass
/// >= 1e-14. Throws GeometryError for a non-positive Hessian there.
SolitonResidual soliton_residual(const Potential& phi, const TorusVector& xi,
                                 const QuadratureGrid& grid);

struct PotentialDistance {
  double sup = 0.0;
  double l2 = 0.0;
};

/// Both potentials normalized to mean zero against dnu_reference; sup over
/// the grid nodes and L2(dnu_reference / Vol).
PotentialDistance compare_to_soliton(const Potential& phi_p, const Potential& phi_inf,
                                     const QuadratureGrid& grid, const Potential& reference);

}  // namespace qsol
