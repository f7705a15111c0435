#include "qsol/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"
#include "qsol/soliton_fields.hpp"

namespace qsol {
namespace {

constexpr double kSkip = 50.0;
constexpr std::size_t kChunk = 2048;

// Legendre values and derivatives P_0..P_n at s.
void legendre(int n, double s, std::vector<double>& v, std::vector<double>& dv) {
  v.assign(n + 1, 0.0);
  dv.assign(n + 1, 0.0);
  v[0] = 1.0;
  if (n >= 1) {
    v[1] = s;
    dv[1] = 1.0;
  }
  for (int k = 2; k <= n; ++k) {
    v[k] = ((2.0 * k - 1.0) * s * v[k - 1] - (k - 1.0) * v[k - 2]) / k;
    dv[k] = dv[k - 2] + (2.0 * k - 1.0) * v[k - 1];
  }
}

Eigen::VectorXd tz_eigenvalues(const Potential& phi, const ReflexivePolytope& polytope,
                               const TorusVector& xi, int degree) {
  const int n = polytope.dimension();
  std::array<double, 2> lo{0.0, 0.0}, hi{0.0, 0.0};
  for (auto& v : polytope.vertices()) {
    for (int d = 0; d < n; ++d) {
      lo[d] = std::min(lo[d], v[d]);
      hi[d] = std::max(hi[d], v[d]);
    }
  }
  std::vector<std::array<int, 2>> index;
  for (int i = 0; i <= degree; ++i) {
    if (n == 1) {
      index.push_back({i, 0});
      continue;
    }
    for (int j = 0; i + j <= degree; ++j) index.push_back({i, j});
  }
  const int m = static_cast<int>(index.size());
  const PolytopeRule rule = polytope_rule(polytope, degree + 24);
  const std::size_t Q = rule.points.size();

  // Per node: quadrature weight, Hessian at x(u), basis values and gradients.
  std::vector<Eigen::MatrixXd> local_k(Q), local_m(Q);
  std::vector<double> wq(Q);
  std::vector<Eigen::Matrix2d> gq(Q);
  std::vector<Eigen::VectorXd> bq(Q);
  std::vector<Eigen::MatrixXd> dbq(Q);
  parallel_for(Q, [&](std::size_t q) {
    const RealPoint& u = rule.points[q];
    const RealPoint x = legendre_argmax(phi, u, 1.0);
    const PotentialJet j = phi.jet(x);
    Eigen::Matrix2d g;
    g << j.hess[0], j.hess[1], j.hess[2], j.hess[3];
    gq[q] = g;
    double e = u[0] * xi[0];
    if (n == 2) e += u[1] * xi[1];
    wq[q] = rule.weights[q] * std::exp(e);
    std::vector<double> v0, d0, v1, d1;
    const double s0 = (2.0 * u[0] - lo[0] - hi[0]) / (hi[0] - lo[0]);
    legendre(degree, s0, v0, d0);
    double s1 = 0.0;
    if (n == 2) s1 = (2.0 * u[1] - lo[1] - hi[1]) / (hi[1] - lo[1]);
    legendre(degree, s1, v1, d1);
    Eigen::VectorXd b(m);
    Eigen::MatrixXd db(2, m);
    for (int k = 0; k < m; ++k) {
      const int i = index[k][0], jj = index[k][1];
      const double c0 = 2.0 / (hi[0] - lo[0]);
      b[k] = v0[i] * (n == 2 ? v1[jj] : 1.0);
      db(0, k) = c0 * d0[i] * (n == 2 ? v1[jj] : 1.0);
      db(1, k) = n == 2 ? v0[i] * d1[jj] * 2.0 / (hi[1] - lo[1]) : 0.0;
    }
    bq[q] = b;
    dbq[q] = db;
  });
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m), M = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t q = 0; q < Q; ++q) {
    K.noalias() += wq[q] * dbq[q].transpose() * gq[q] * dbq[q];
    M.noalias() += wq[q] * bq[q] * bq[q].transpose();
  }
  K = 0.5 * (K + K.transpose()).eval();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("tz_spectrum: generalized eigensolve failed");
  return es.eigenvalues();
}

}  // namespace

ChannelMatrix channel_matrix(const InvariantProduct& product, const Potential& ambient,
                             const TorusVector& xi, const QuadratureGrid& grid) {
  validate_product(product);
  const SectionBasis& basis = product.basis;
  const std::size_t np = basis.size();
  const std::size_t N = grid.size();
  const double c = product.level() + 1.0;
  const std::vector<double> phi = ambient.values(grid.points);
  const InvariantProduct twisted = twist_product(product, xi);

  // Row maxima of the exponent, so every kernel entry is <= 1.
  std::vector<double> row_max(np);
  parallel_for(np, [&](std::size_t a) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < N; ++q) {
      m = std::max(m, grid.log_weights[q] + basis.dot(a, grid.points[q].data()) - c * phi[q]);
    }
    row_max[a] = m;
  });

  const std::size_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> partial(chunks);
  parallel_for(chunks, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk;
    const std::size_t len = std::min(N, begin + kChunk) - begin;
    Eigen::MatrixXd K(np, len), W(len, np);
    std::vector<double> w(np);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t q = begin + i;
      for (std::size_t a = 0; a < np; ++a) {
        const double t = grid.log_weights[q] + basis.dot(a, grid.points[q].data()) - c * phi[q] -
                         row_max[a];
        K(a, i) = t > -kSkip ? std::exp(t) : 0.0;
      }
      berezin_weights(twisted, grid.points[q], w);
      for (std::size_t b = 0; b < np; ++b) W(i, b) = w[b];
    }
    partial[ch] = K * W;
  });
  ChannelMatrix out;
  out.matrix = Eigen::MatrixXd::Zero(np, np);
  for (auto& part : partial) out.matrix += part;
  const double l2p = log_two_pi_power(basis.dimension);
  for (std::size_t a = 0; a < np; ++a) {
    out.matrix.row(a) *= std::exp(row_max[a] + l2p - product.log_weights[a]);
  }
  out.d = twist_weights(basis, xi);
  out.unitality_defect = (out.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff();
  Eigen::VectorXd sq(np);
  for (std::size_t a = 0; a < np; ++a) sq[a] = std::sqrt(out.d[a]);
  const Eigen::MatrixXd S = sq.asDiagonal() * out.matrix * sq.cwiseInverse().asDiagonal();
  out.symmetry_defect = (S - S.transpose()).cwiseAbs().maxCoeff() / S.cwiseAbs().maxCoeff();
  return out;
}

ChannelSpectrum channel_spectrum(const ChannelMatrix& channel, double quad_tol) {
  if (channel.symmetry_defect > 100.0 * quad_tol) {
    throw ConventionsError("channel_spectrum: symmetrization defect " +
                           std::to_string(channel.symmetry_defect) +
                           " exceeds 100 * quad.tol; coordinate conventions are inconsistent");
  }
  const Eigen::Index np = channel.matrix.rows();
  Eigen::VectorXd sq(np);
  for (Eigen::Index a = 0; a < np; ++a) sq[a] = std::sqrt(channel.d[a]);
  Eigen::MatrixXd S = sq.asDiagonal() * channel.matrix * sq.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw SolverError("channel_spectrum: eigensolve failed");
  ChannelSpectrum out;
  out.eigenvectors.resize(np, np);
  for (Eigen::Index k = 0; k < np; ++k) {
    const Eigen::Index src = np - 1 - k;
    out.eigenvalues.push_back(es.eigenvalues()[src]);
    Eigen::VectorXd a = sq.cwiseInverse().asDiagonal() * es.eigenvectors().col(src);
    // Fix the sign so that runs are reproducible: largest entry positive.
    Eigen::Index imax = 0;
    a.cwiseAbs().maxCoeff(&imax);
    if (a[imax] < 0.0) a = -a;
    out.eigenvectors.col(k) = a;
  }
  return out;
}

double eigenfunction_defect(const ChannelSpectrum& spectrum, int k,
                            const InvariantProduct& product, const Potential& ambient,
                            const TorusVector& xi, const QuadratureGrid& grid) {
  const InvariantProduct twisted = twist_product(product, xi);
  DiagonalObservable A;
  A.values.assign(spectrum.eigenvectors.col(k).data(),
                  spectrum.eigenvectors.col(k).data() + spectrum.eigenvectors.rows());
  std::vector<double> f(grid.size());
  for (std::size_t q = 0; q < f.size(); ++q) f[q] = berezin_symbol(A, twisted, grid.points[q]);
  const DiagonalObservable tf = toeplitz_nodes(f, product, ambient.values(grid.points), grid);
  const double gamma = spectrum.eigenvalues[k];
  double worst = 0.0, scale = 0.0;
  for (std::size_t q = 0; q < f.size(); ++q) {
    const double bf = berezin_symbol(tf, twisted, grid.points[q]);
    worst = std::max(worst, std::abs(bf - gamma * f[q]));
    scale = std::max(scale, std::abs(f[q]));
  }
  return worst / scale;
}

TzSpectrum tz_spectrum(const Potential& phi, const ReflexivePolytope& polytope,
                       const TorusVector& xi, int k_max, int degree) {
  if (degree < 2) throw ConfigError("tz_spectrum: polynomial degree must be >= 2");
  if (k_max < 1) throw ConfigError("tz_spectrum: k_max must be >= 1");
  const Eigen::VectorXd fine = tz_eigenvalues(phi, polytope, xi, degree);
  const Eigen::VectorXd coarse = tz_eigenvalues(phi, polytope, xi, degree - 2);
  TzSpectrum out;
  out.degree = degree;
  for (Eigen::Index k = 0; k <= k_max && k < fine.size(); ++k) out.eigenvalues.push_back(fine[k]);
  out.lambda1_change = std::abs(fine[1] - coarse[1]);
  out.resolved = out.lambda1_change < 1e-4;
  return out;
}

GapReport gap_report(const std::string& manifold, XiPolicy policy, const std::vector<int>& p_list,
                     const GapOptions& options) {
  for (std::size_t i = 1; i < p_list.size(); ++i) {
    if (p_list[i] <= p_list[i - 1]) throw ConfigError("gap_report: p list must be increasing");
  }
  const ReflexivePolytope polytope = load_preset(manifold);
  GapReport report;
  report.rows.resize(p_list.size());
  parallel_for(p_list.size(), [&](std::size_t r) {
    GapRow& row = report.rows[r];
    row.p = p_list[r];
    try {
      const SectionBasis basis = lattice_points(polytope, row.p);
      if (policy == XiPolicy::xi_p) row.xi = solve_xi_p(basis, options.solver_tol).solution;
      Potential ambient = Potential::round_cp1();
      if (manifold == "CP1" && row.xi[0] == 0.0) {
        row.metric = "round";
      } else {
        BalanceConfig cfg;
        cfg.manifold = manifold;
        cfg.p = row.p;
        cfg.xi = row.xi;
        cfg.tolerance = options.flow_tol;
        cfg.max_iterations = options.flow_max_iterations;
        cfg.quadrature = options.quadrature;
        const FlowState flow = run_flow(cfg);
        ambient = balanced_potential(flow.product, row.xi);
        row.metric = flow.converged ? "balanced" : "balanced (not converged)";
      }
      QuadratureOptions qopt = options.quadrature;
      qopt.margin = std::max(qopt.margin, std::hypot(row.xi[0], row.xi[1]) / row.p);
      const QuadratureGrid grid = build_grid(ambient, polytope, basis, qopt);
      const InvariantProduct h = gram(ambient, basis, grid);
      const ChannelMatrix channel = channel_matrix(h, ambient, row.xi, grid);
      row.unitality_defect = channel.unitality_defect;
      row.symmetry_defect = channel.symmetry_defect;
      const ChannelSpectrum spec = channel_spectrum(channel, options.quadrature.tol);
      const TzSpectrum tz = tz_spectrum(ambient, polytope, row.xi, options.k_max, options.tz_degree);
      row.tz_resolved = tz.resolved;
      for (int k = 0; k <= options.k_max && k < static_cast<int>(spec.eigenvalues.size()); ++k) {
        const double lambda = k < static_cast<int>(tz.eigenvalues.size())
                                  ? tz.eigenvalues[k]
                                  : std::numeric_limits<double>::quiet_NaN();
        row.gamma.push_back(spec.eigenvalues[k]);
        row.lambda.push_back(lambda);
        row.defect.push_back(std::abs(1.0 - spec.eigenvalues[k] - lambda / row.p));
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  for (int k = 0; k <= options.k_max; ++k) {
    std::vector<double> ps, ds;
    for (auto& row : report.rows) {
      if (row.error.empty() && k < static_cast<int>(row.defect.size())) {
        ps.push_back(row.p);
        ds.push_back(row.defect[k]);
      }
    }
    report.slopes.push_back(loglog_fit(ps, ds));
  }
  return report;
}

}  // namespace qsol
