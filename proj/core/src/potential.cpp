#include "qsol/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"

namespace qsol {
namespace {

// exp(-50) relative terms cannot change a double sum of <= 1e6 terms.
constexpr double kSkip = 50.0;

class RoundModel final : public PotentialModel {
 public:
  double value(const RealPoint& x) const override {
    const double a = std::abs(x[0]);
    return a + 2.0 * std::log1p(std::exp(-a));
  }
  PotentialJet jet(const RealPoint& x) const override {
    PotentialJet j;
    j.value = value(x);
    const double t = std::tanh(0.5 * x[0]);
    j.grad[0] = t;
    j.hess[0] = 0.5 * (1.0 - t * t);
    return j;
  }
};

class LogSumExpModel final : public PotentialModel {
 public:
  LogSumExpModel(int dimension, std::vector<LatticePoint> exponents, std::vector<double> offsets,
                 double scale)
      : dimension_(dimension),
        exponents_(std::move(exponents)),
        offsets_(std::move(offsets)),
        scale_(scale) {}

  double value(const RealPoint& x) const override {
    double m = -std::numeric_limits<double>::infinity();
    const std::size_t k = exponents_.size();
    // Two passes: the maximum, then the shifted sum.
    for (std::size_t a = 0; a < k; ++a) m = std::max(m, exponent(a, x));
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double t = exponent(a, x) - m;
      if (t > -kSkip) s += std::exp(t);
    }
    return (m + std::log(s)) / scale_;
  }

  PotentialJet jet(const RealPoint& x) const override {
    std::vector<double> w(exponents_.size());
    PotentialJet j;
    j.value = softmax(exponents_, dimension_, offsets_, x, w) / scale_;
    double mean[2] = {0.0, 0.0};
    for (std::size_t a = 0; a < w.size(); ++a) {
      mean[0] += w[a] * exponents_[a][0];
      mean[1] += w[a] * exponents_[a][1];
    }
    double cov[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < w.size(); ++a) {
      const double d0 = exponents_[a][0] - mean[0];
      const double d1 = exponents_[a][1] - mean[1];
      cov[0] += w[a] * d0 * d0;
      cov[1] += w[a] * d0 * d1;
      cov[3] += w[a] * d1 * d1;
    }
    cov[2] = cov[1];
    if (dimension_ == 2) {
      // Near a ray of the fan the covariance is almost rank one and
      // cov0*cov3 - cov1^2 cancels. Schur complement as a sum of squares:
      // det = c_ii * sum_a w_a (d_j - beta d_i)^2 with beta = c_ij / c_ii.
      const int i = cov[0] >= cov[3] ? 0 : 1;
      const double cii = i == 0 ? cov[0] : cov[3];
      const double beta = cov[1] / cii;
      double schur = 0.0;
      for (std::size_t a = 0; a < w.size(); ++a) {
        const double e = (exponents_[a][1 - i] - mean[1 - i]) - beta * (exponents_[a][i] - mean[i]);
        schur += w[a] * e * e;
      }
      j.det = cii * schur / (scale_ * scale_);
    } else {
      j.det = cov[0] / scale_;
    }
    for (int d = 0; d < dimension_; ++d) j.grad[d] = mean[d] / scale_;
    for (int r = 0; r < 4; ++r) j.hess[r] = cov[r] / scale_;
    if (dimension_ == 1) j.hess[1] = j.hess[2] = j.hess[3] = 0.0;
    return j;
  }

 private:
  double exponent(std::size_t a, const RealPoint& x) const {
    double t = exponents_[a][0] * x[0] - offsets_[a];
    if (dimension_ == 2) t += exponents_[a][1] * x[1];
    return t;
  }

  int dimension_;
  std::vector<LatticePoint> exponents_;
  std::vector<double> offsets_;
  double scale_;
};

class FunctionModel final : public PotentialModel {
 public:
  explicit FunctionModel(std::function<PotentialJet(const RealPoint&)> f) : f_(std::move(f)) {}
  double value(const RealPoint& x) const override { return f_(x).value; }
  PotentialJet jet(const RealPoint& x) const override { return f_(x); }

 private:
  std::function<PotentialJet(const RealPoint&)> f_;
};

class TranslatedModel final : public PotentialModel {
 public:
  TranslatedModel(std::shared_ptr<const PotentialModel> base, RealPoint delta)
      : base_(std::move(base)), delta_(delta) {}
  double value(const RealPoint& x) const override { return base_->value(shift(x)); }
  PotentialJet jet(const RealPoint& x) const override { return base_->jet(shift(x)); }

 private:
  RealPoint shift(const RealPoint& x) const { return {x[0] + delta_[0], x[1] + delta_[1]}; }
  std::shared_ptr<const PotentialModel> base_;
  RealPoint delta_;
};

}  // namespace

void validate_product(const InvariantProduct& product) {
  if (product.log_weights.size() != product.basis.size()) {
    throw GeometryError("invariant product: weight count does not match the basis");
  }
  for (double l : product.log_weights) {
    if (!std::isfinite(l)) throw GeometryError("invariant product: non-finite log weight");
  }
}

std::string kind_name(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::fubini_study:
      return "fubini_study";
    case PotentialKind::round_cp1:
      return "round_cp1";
    case PotentialKind::user_defined:
      return "user_defined";
  }
  return "unknown";
}

Potential::Potential(int dimension, PotentialKind kind, std::string description,
                     std::shared_ptr<const PotentialModel> model, double gauge)
    : dimension_(dimension),
      kind_(kind),
      description_(std::move(description)),
      model_(std::move(model)),
      gauge_(gauge) {}

Potential Potential::round_cp1() {
  return Potential(1, PotentialKind::round_cp1, "2*log(2*cosh(x/2))",
                   std::make_shared<RoundModel>());
}

Potential Potential::log_sum_exp(int dimension, std::vector<LatticePoint> exponents,
                                 std::vector<double> offsets, double scale, PotentialKind kind,
                                 std::string description) {
  if (exponents.empty() || exponents.size() != offsets.size() || !(scale > 0.0)) {
    throw GeometryError("log-sum-exp potential: inconsistent data");
  }
  return Potential(dimension, kind, std::move(description),
                   std::make_shared<LogSumExpModel>(dimension, std::move(exponents),
                                                    std::move(offsets), scale));
}

Potential Potential::user_defined(int dimension, std::string description,
                                  std::function<PotentialJet(const RealPoint&)> jet) {
  return Potential(dimension, PotentialKind::user_defined, std::move(description),
                   std::make_shared<FunctionModel>(std::move(jet)));
}

Potential Potential::plus_constant(double c) const {
  Potential out = *this;
  out.gauge_ += c;
  return out;
}

Potential Potential::translated(const RealPoint& delta) const {
  return Potential(dimension_, kind_, description_,
                   std::make_shared<TranslatedModel>(model_, delta), gauge_);
}

PotentialJet Potential::jet(const RealPoint& x) const {
  PotentialJet j = model_->jet(x);
  j.value += gauge_;
  return j;
}

std::vector<double> Potential::values(std::span<const RealPoint> xs) const {
  std::vector<double> out(xs.size());
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (xs.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(xs.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = value(xs[i]);
  });
  return out;
}

double softmax(const std::vector<LatticePoint>& exponents, int dimension,
               std::span<const double> offsets, const RealPoint& x, std::span<double> w) {
  const std::size_t k = exponents.size();
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < k; ++a) {
    double t = exponents[a][0] * x[0] - offsets[a];
    if (dimension == 2) t += exponents[a][1] * x[1];
    w[a] = t;
    m = std::max(m, t);
  }
  double s = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    const double t = w[a] - m;
    w[a] = std::exp(t);  // tiny weights carry the Hessian far out; underflow is harmless
    s += w[a];
  }
  for (std::size_t a = 0; a < k; ++a) w[a] /= s;
  return m + std::log(s);
}

RealPoint legendre_argmax(const Potential& phi, const RealPoint& a, double c) {
  const int n = phi.dimension();
  auto objective = [&](const RealPoint& x) {
    double t = a[0] * x[0] - c * phi.value(x);
    if (n == 2) t += a[1] * x[1];
    return t;
  };
  RealPoint x{0.0, 0.0};
  for (int it = 0; it < 200; ++it) {
    const PotentialJet j = phi.jet(x);
    const double g0 = c * j.grad[0] - a[0];
    const double g1 = n == 2 ? c * j.grad[1] - a[1] : 0.0;
    double step[2] = {0.0, 0.0};
    if (n == 1) {
      step[0] = -g0 / (c * j.hess[0]);
    } else {
      const double h00 = c * j.hess[0], h01 = c * j.hess[1], h11 = c * j.hess[3];
      const double det = h00 * h11 - h01 * h01;
      step[0] = -(h11 * g0 - h01 * g1) / det;
      step[1] = -(-h01 * g0 + h00 * g1) / det;
    }
    if (!std::isfinite(step[0]) || !std::isfinite(step[1])) break;
    // Cap the step: far from the peak the quadratic model is poor.
    const double len = std::hypot(step[0], step[1]);
    if (len > 4.0) {
      step[0] *= 4.0 / len;
      step[1] *= 4.0 / len;
    }
    const double f0 = objective(x);
    double tau = 1.0;
    RealPoint trial{};
    for (int k = 0; k < 60; ++k) {
      trial = {x[0] + tau * step[0], x[1] + tau * step[1]};
      if (objective(trial) >= f0) break;
      tau *= 0.5;
    }
    x = trial;
    if (tau * std::min(len, 4.0) < 1e-13 * (1.0 + std::hypot(x[0], x[1]))) break;
  }
  return x;
}

}  // namespace qsol
