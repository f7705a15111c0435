#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qsol/toric.hpp"

namespace qsol {

/// Positive torus-invariant Hermitian product on H^0(X, L^p). It is diagonal
/// in the monomial basis and stored as log squared norms ell_alpha.
struct InvariantProduct {
  SectionBasis basis;
  std::vector<double> log_weights;

  int level() const { return basis.level; }
  int dimension() const { return basis.dimension; }
  std::size_t size() const { return log_weights.size(); }
};

/// Throws GeometryError unless weights are finite and match the basis.
void validate_product(const InvariantProduct& product);

/// Value, gradient and Hessian (row-major 2x2; only the leading n x n block
/// is meaningful).
struct PotentialJet {
  double value = 0.0;
  std::array<double, 2> grad{};
  std::array<double, 4> hess{};
  double det = 0.0;  // set by models that evaluate the determinant stably

  double hessian_det(int dimension) const {
    if (det > 0.0) return det;
    return dimension == 1 ? hess[0] : hess[0] * hess[3] - hess[1] * hess[2];
  }
};

enum class PotentialKind { fubini_study, round_cp1, user_defined };

std::string kind_name(PotentialKind kind);

/// Evaluation backend of a potential. Implementations are immutable.
class PotentialModel {
 public:
  virtual ~PotentialModel() = default;
  virtual double value(const RealPoint& x) const = 0;
  virtual PotentialJet jet(const RealPoint& x) const = 0;
};

/// Smooth strictly convex function on log-coordinates R^n, with an explicit
/// additive gauge constant. Cheap to copy; the model is shared.
class Potential {
 public:
  Potential(int dimension, PotentialKind kind, std::string description,
            std::shared_ptr<const PotentialModel> model, double gauge = 0.0);

  /// 2 log(2 cosh(x/2)): the SU(2)-invariant metric on CP1.
  static Potential round_cp1();

  /// (1/scale) log sum_a exp(<a, x> - offsets_a).
  static Potential log_sum_exp(int dimension, std::vector<LatticePoint> exponents,
                               std::vector<double> offsets, double scale, PotentialKind kind,
                               std::string description);

  static Potential user_defined(int dimension, std::string description,
                                std::function<PotentialJet(const RealPoint&)> jet);

  int dimension() const { return dimension_; }
  PotentialKind kind() const { return kind_; }
  const std::string& description() const { return description_; }
  double gauge() const { return gauge_; }

  /// Same function plus c.
  Potential plus_constant(double c) const;
  /// x -> phi(x + delta).
  Potential translated(const RealPoint& delta) const;

  double value(const RealPoint& x) const { return model_->value(x) + gauge_; }
  PotentialJet jet(const RealPoint& x) const;
  /// Values at many points, evaluated in parallel.
  std::vector<double> values(std::span<const RealPoint> xs) const;

 private:
  int dimension_;
  PotentialKind kind_;
  std::string description_;
  std::shared_ptr<const PotentialModel> model_;
  double gauge_;
};

/// Softmax weights of exp(<a, x> - offsets_a): fills w (size = exponents)
/// and returns the log-normalizer log sum_a exp(<a, x> - offsets_a).
double softmax(const std::vector<LatticePoint>& exponents, int dimension,
               std::span<const double> offsets, const RealPoint& x, std::span<double> w);

/// argmax_x <a, x> - c phi(x) by damped Newton; for c = 1 this inverts the
/// gradient map, grad phi(x) = a.
RealPoint legendre_argmax(const Potential& phi, const RealPoint& a, double c = 1.0);

}  // namespace qsol
