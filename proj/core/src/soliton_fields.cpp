#include "qsol/soliton_fields.hpp"

#include <cmath>
#include <limits>

#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"

namespace qsol {
namespace {

Eigen::VectorXd to_eigen(const TorusVector& v, int n) {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = v[i];
  return out;
}

TorusVector from_eigen(const Eigen::VectorXd& v) {
  TorusVector out{0.0, 0.0};
  for (int i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

double condition_number(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  return lo > 0.0 ? es.eigenvalues().maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

// Generic damped Newton for a smooth strictly convex function.
template <class Eval, class Scale>
SolitonSolveReport newton(int n, Eigen::VectorXd x, double tol, Eval eval, Scale scale,
                          const char* what) {
  if (!(tol > 0.0)) throw ConfigError(std::string(what) + ": tolerance must be positive");
  SolitonSolveReport report;
  for (int it = 0; it <= 200; ++it) {
    auto [f, g, h] = eval(x);
    const double gnorm = g.norm();
    const double rel = gnorm / scale(x);
    report.iterations = it;
    report.gradient_norm = gnorm;
    report.relative_gradient = rel;
    report.hessian_condition = condition_number(h);
    if (rel <= tol) {
      report.solution = from_eigen(x);
      return report;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        !(report.hessian_condition < 1e14)) {
      throw SolverError(std::string(what) + ": Hessian numerically singular");
    }
    const Eigen::VectorXd d = -ldlt.solve(g);
    const double slope = g.dot(d);
    double tau = 1.0;
    Eigen::VectorXd trial = x + d;
    int k = 0;
    for (; k < 60; ++k) {
      trial = x + tau * d;
      if (std::get<0>(eval(trial)) <= f + 1e-4 * tau * slope) break;
      tau *= 0.5;
    }
    if (k == 60 || (trial - x).norm() == 0.0) {
      // No representable decrease left: accept when the gradient sits at the
      // rounding floor of the objective.
      if (rel <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(1, n)) {
        report.solution = from_eigen(x);
        return report;
      }
      throw SolverError(std::string(what) + ": line search failed at relative gradient " +
                        std::to_string(rel));
    }
    x = trial;
  }
  throw SolverError(std::string(what) + ": no convergence within 200 Newton steps");
}

}  // namespace

FpJet f_p(const SectionBasis& basis, const TorusVector& xi) {
  const int n = basis.dimension;
  const double p = basis.level;
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < basis.size(); ++a) m = std::max(m, basis.dot(a, xi.data()) / p);
  FpJet out;
  out.gradient = Eigen::VectorXd::Zero(n);
  out.hessian = Eigen::MatrixXd::Zero(n, n);
  double s = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const double e = std::exp(basis.dot(a, xi.data()) / p - m);
    s += e;
    for (int i = 0; i < n; ++i) {
      out.gradient[i] += basis.points[a][i] * e;
      for (int j = 0; j < n; ++j) out.hessian(i, j) += basis.points[a][i] * basis.points[a][j] * e;
    }
  }
  const double scale = std::exp(m);
  out.value = p * s * scale;
  out.gradient *= scale;
  out.hessian *= scale / p;
  return out;
}

double quantized_futaki(const SectionBasis& basis, const TorusVector& xi, const TorusVector& eta) {
  const double p = basis.level;
  double s = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    s += basis.dot(a, eta.data()) * std::exp(basis.dot(a, xi.data()) / p);
  }
  return s;
}

SolitonSolveReport solve_xi_p(const SectionBasis& basis, double tol, TorusVector start) {
  const int n = basis.dimension;
  auto eval = [&](const Eigen::VectorXd& x) {
    FpJet j = f_p(basis, from_eigen(x));
    return std::make_tuple(j.value, j.gradient, j.hessian);
  };
  auto scale = [&](const Eigen::VectorXd& x) {
    const TorusVector xi = from_eigen(x);
    double s = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      double len = 0.0;
      for (int i = 0; i < n; ++i) len += double(basis.points[a][i]) * basis.points[a][i];
      s += std::sqrt(len) * std::exp(basis.dot(a, xi.data()) / basis.level);
    }
    return s;
  };
  return newton(n, to_eigen(start, n), tol, eval, scale, "solve_xi_p");
}

SolitonSolveReport solve_xi_infinity(const ReflexivePolytope& polytope, double tol,
                                     TorusVector start) {
  const int n = polytope.dimension();
  auto eval = [&](const Eigen::VectorXd& x) {
    ExponentialMoments m = polytope_exponential_moments(polytope, x, 1e-14);
    return std::make_tuple(m.value, m.first, m.second);
  };
  auto scale = [&](const Eigen::VectorXd& x) {
    return polytope_exponential_moments(polytope, x, 1e-14).value;
  };
  return newton(n, to_eigen(start, n), tol, eval, scale, "solve_xi_infinity");
}

XiAsymptotics xi_asymptotics(const ReflexivePolytope& polytope, const std::vector<int>& p_list,
                             double tol) {
  for (std::size_t i = 1; i < p_list.size(); ++i) {
    if (p_list[i] <= p_list[i - 1]) throw ConfigError("xi_asymptotics: p list must be increasing");
  }
  XiAsymptotics out;
  out.xi_infinity = solve_xi_infinity(polytope, tol).solution;
  out.rows.resize(p_list.size());
  parallel_for(p_list.size(), [&](std::size_t k) {
    XiRow& row = out.rows[k];
    row.p = p_list[k];
    try {
      SolitonSolveReport r = solve_xi_p(lattice_points(polytope, row.p), tol);
      row.xi_p = r.solution;
      row.iterations = r.iterations;
      row.gap = std::hypot(r.solution[0] - out.xi_infinity[0], r.solution[1] - out.xi_infinity[1]);
    } catch (const Error& e) {
      row.error = e.what();
      row.gap = std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::vector<double> ps, gaps;
  for (auto& row : out.rows) {
    if (row.error.empty()) {
      ps.push_back(row.p);
      gaps.push_back(row.gap);
    }
  }
  out.fit = loglog_fit(ps, gaps);
  return out;
}

}  // namespace qsol
