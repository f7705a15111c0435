#include "qsol/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsol/errors.hpp"
#include "qsol/numerics.hpp"

namespace qsol {
namespace {

// Everything the flow needs about one product, computed on the grid.
struct Snapshot {
  std::vector<double> phi_twisted;  // phi_FS,H(x + xi/p) at the nodes
  std::vector<double> log_g;        // log G_a
  double log_vol = 0.0;
  double log_tr = 0.0;
};

Snapshot snapshot(const InvariantProduct& h, const TorusVector& xi, const QuadratureGrid& grid) {
  Snapshot s;
  const InvariantProduct twisted = twist_product(h, xi);
  s.phi_twisted = fs_potential(twisted).values(grid.points);
  s.log_vol = log_volume_from_nodes(s.phi_twisted, grid);
  const InvariantProduct g = gram_from_nodes(s.phi_twisted, h.basis, grid);
  s.log_g.resize(h.size());
  for (std::size_t a = 0; a < h.size(); ++a) s.log_g[a] = g.log_weights[a] - h.log_weights[a];
  s.log_tr = log_twisted_trace(h.basis, xi);
  return s;
}

DiagonalObservable mu_of(const Snapshot& s) {
  DiagonalObservable mu;
  const double level = std::exp(s.log_vol - s.log_tr);
  mu.values.resize(s.log_g.size());
  for (std::size_t a = 0; a < mu.size(); ++a) mu.values[a] = std::exp(s.log_g[a]) - level;
  return mu;
}

double residual_of(const InvariantProduct& h, const TorusVector& xi, const Snapshot& s,
                   const QuadratureGrid& grid) {
  // sum_a v_a(x) / g_a with g_a = G_a Tr / Vol, v the softmax at x + xi/p.
  const InvariantProduct twisted = twist_product(h, xi);
  std::vector<double> offsets(h.size());
  for (std::size_t a = 0; a < h.size(); ++a) {
    offsets[a] = twisted.log_weights[a] + s.log_g[a] + s.log_tr - s.log_vol;
  }
  const Potential lse = Potential::log_sum_exp(h.dimension(), h.basis.points, offsets, 1.0,
                                               PotentialKind::user_defined, "residual");
  const std::vector<double> v = lse.values(grid.points);
  const double p = h.level();
  double r = 0.0;
  for (std::size_t q = 0; q < v.size(); ++q) {
    r = std::max(r, std::abs(std::expm1(v[q] - p * s.phi_twisted[q])));
  }
  return r;
}

double energy_of(const InvariantProduct& h, const TorusVector& xi, const Snapshot& s,
                 const InvariantProduct& reference) {
  const double p = h.level();
  std::vector<double> terms(h.size());
  for (std::size_t a = 0; a < h.size(); ++a) {
    terms[a] = std::exp(h.basis.dot(a, xi.data()) / p - s.log_tr) *
               (h.log_weights[a] - reference.log_weights[a]);
  }
  return -s.log_vol + pairwise_sum(terms) / p;
}

double dissipation_of(const InvariantProduct& h, const TorusVector& xi, const Snapshot& s) {
  const DiagonalObservable mu = mu_of(s);
  const std::vector<double> d = twist_weights(h.basis, xi);
  std::vector<double> terms(mu.size());
  for (std::size_t a = 0; a < mu.size(); ++a) terms[a] = d[a] * mu.values[a] * mu.values[a];
  return 2.0 / (h.level() * std::exp(s.log_vol)) * pairwise_sum(terms);
}

bool grid_covers(const QuadratureGrid& current, const QuadratureGrid& needed) {
  return needed.order <= current.order && needed.extent <= current.extent * (1.0 + 1e-12);
}

}  // namespace

std::vector<double> twist_weights(const SectionBasis& basis, const TorusVector& xi) {
  std::vector<double> d(basis.size());
  for (std::size_t a = 0; a < d.size(); ++a) d[a] = std::exp(basis.dot(a, xi.data()) / basis.level);
  return d;
}

double log_twisted_trace(const SectionBasis& basis, const TorusVector& xi) {
  std::vector<double> t(basis.size());
  for (std::size_t a = 0; a < t.size(); ++a) t[a] = basis.dot(a, xi.data()) / basis.level;
  return log_sum_exp(t);
}

DiagonalObservable moment_map(const InvariantProduct& product, const TorusVector& xi,
                              const QuadratureGrid& grid) {
  return mu_of(snapshot(product, xi, grid));
}

InvariantProduct t_step(const InvariantProduct& product, const TorusVector& xi,
                        const QuadratureGrid& grid) {
  const Snapshot s = snapshot(product, xi, grid);
  InvariantProduct out = product;
  for (std::size_t a = 0; a < out.size(); ++a) {
    out.log_weights[a] += s.log_g[a] + s.log_tr - s.log_vol;
  }
  return out;
}

double balanced_residual(const InvariantProduct& product, const TorusVector& xi,
                         const QuadratureGrid& grid) {
  return residual_of(product, xi, snapshot(product, xi, grid), grid);
}

double energy(const InvariantProduct& product, const TorusVector& xi, const QuadratureGrid& grid,
              const InvariantProduct& reference) {
  return energy_of(product, xi, snapshot(product, xi, grid), reference);
}

Potential balanced_potential(const InvariantProduct& product, const TorusVector& xi) {
  return fs_potential(twist_product(product, xi));
}

double energy_resolution(double psi) {
  return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(psi));
}

FlowState run_flow(const BalanceConfig& config) {
  if (!(config.tolerance > 0.0)) throw ConfigError("flow.tol must be positive");
  if (config.max_iterations < 1) throw ConfigError("flow.max_iter must be >= 1");
  const ReflexivePolytope polytope = load_preset(config.manifold);
  const SectionBasis basis = lattice_points(polytope, config.p);
  const int n = polytope.dimension();
  for (int i = n; i < 2; ++i) {
    if (config.xi[i] != 0.0) throw ConfigError("xi has more components than the manifold dimension");
  }
  QuadratureOptions qopt = config.quadrature;
  qopt.margin = std::max(qopt.margin, std::hypot(config.xi[0], config.xi[1]) / config.p);

  InvariantProduct start;
  switch (config.initial) {
    case InitialProduct::gram_of_reference_potential: {
      const Potential ref = reference_potential(polytope);
      start = gram(ref, basis, build_grid(ref, polytope, basis, qopt));
      break;
    }
    case InitialProduct::uniform_weights:
      start = uniform_product(basis);
      break;
    case InitialProduct::file:
      if (!config.initial_product) throw ConfigError("initial product file not provided");
      start = *config.initial_product;
      if (start.basis.points != basis.points) {
        throw ConfigError("initial product does not match the basis of the requested level");
      }
      break;
  }
  validate_product(start);

  FlowState state;
  state.reference = start;
  state.grid = build_grid(balanced_potential(start, config.xi), polytope, basis, qopt);

  InvariantProduct current = start;
  Snapshot snap = snapshot(current, config.xi, state.grid);
  double psi = energy_of(current, config.xi, snap, state.reference);
  double res = residual_of(current, config.xi, snap, state.grid);
  double best_res = res;
  state.product = current;
  auto record = [&](double step) {
    state.residuals.push_back(res);
    state.energies.push_back(psi);
    state.steps.push_back(step);
    state.dissipation.push_back(dissipation_of(current, config.xi, snap));
    state.segment.push_back(state.regrids);
    if (res < best_res || state.residuals.size() == 1) {
      best_res = res;
      state.product = current;
    }
  };
  record(0.0);

  const double tr_over_vol = std::exp(snap.log_tr - snap.log_vol);
  double dt = config.initial_dt > 0.0 ? config.initial_dt : 0.25 * tr_over_vol;
  const double max_dt = config.max_dt > 0.0 ? config.max_dt : 0.5 * tr_over_vol;
  int attempts = 0;
  const int max_attempts = 40 * config.max_iterations;

  while (state.iterations < config.max_iterations && attempts < max_attempts) {
    if (res <= config.tolerance) {
      // Confirm the grid still resolves the current metric before stopping.
      const QuadratureGrid needed =
          build_grid(balanced_potential(current, config.xi), polytope, basis, qopt);
      if (grid_covers(state.grid, needed) || state.regrids >= 3) {
        state.converged = true;
        break;
      }
      QuadratureOptions wider = qopt;
      wider.initial_order = std::max(state.grid.order, needed.order);
      state.grid = QuadratureGrid::fan(n, state.grid.generators,
                                       std::max(state.grid.extent, needed.extent),
                                       wider.initial_order, qopt.map_scale);
      ++state.regrids;
      snap = snapshot(current, config.xi, state.grid);
      psi = energy_of(current, config.xi, snap, state.reference);
      res = residual_of(current, config.xi, snap, state.grid);
      best_res = std::numeric_limits<double>::infinity();
      record(0.0);
      continue;
    }
    InvariantProduct trial = current;
    double step = 0.0;
    if (config.mode == FlowMode::t_iteration) {
      // Damped T-step; damping halves until the energy does not increase.
      double tau = 1.0;
      for (int k = 0; k < 40; ++k, tau *= 0.5) {
        ++attempts;
        for (std::size_t a = 0; a < trial.size(); ++a) {
          trial.log_weights[a] =
              current.log_weights[a] + tau * (snap.log_g[a] + snap.log_tr - snap.log_vol);
        }
        Snapshot next = snapshot(trial, config.xi, state.grid);
        const double psi_next = energy_of(trial, config.xi, next, state.reference);
        if (psi_next <= psi + energy_resolution(psi)) {
          current = trial;
          snap = std::move(next);
          psi = psi_next;
          step = tau;
          break;
        }
        ++state.rejected_steps;
      }
      if (step == 0.0) break;  // no admissible damping: energy floor reached
    } else {
      ++attempts;
      const DiagonalObservable mu = mu_of(snap);
      for (std::size_t a = 0; a < trial.size(); ++a) {
        trial.log_weights[a] = current.log_weights[a] + 2.0 * dt * mu.values[a];
      }
      Snapshot next = snapshot(trial, config.xi, state.grid);
      const double psi_next = energy_of(trial, config.xi, next, state.reference);
      if (!(psi_next <= psi + energy_resolution(psi))) {
        ++state.rejected_steps;
        dt *= 0.5;
        if (dt < 1e-14 * tr_over_vol) break;
        continue;
      }
      current = trial;
      snap = std::move(next);
      psi = psi_next;
      step = dt;
      dt = std::min(1.2 * dt, max_dt);
    }
    res = residual_of(current, config.xi, snap, state.grid);
    ++state.iterations;
    record(step);
  }
  if (!state.converged && res <= config.tolerance) state.converged = true;
  return state;
}

SolitonResidual soliton_residual(const Potential& phi, const TorusVector& xi,
                                 const QuadratureGrid& grid) {
  const int n = phi.dimension();
  const std::size_t N = grid.size();
  std::vector<double> logmass(N), r(N);
  double mmax = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < N; ++q) {
    logmass[q] = grid.log_weights[q] - phi.value(grid.points[q]);
    mmax = std::max(mmax, logmass[q]);
  }
  const double cut = mmax + std::log(1e-14);
  std::vector<double> w(N, 0.0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t q = 0; q < N; ++q) {
    if (logmass[q] < cut) continue;
    const PotentialJet j = phi.jet(grid.points[q]);
    const double det = j.hessian_det(n);
    if (!(det > 0.0)) throw GeometryError("soliton_residual: Hessian not positive definite");
    double theta = j.grad[0] * xi[0];
    if (n == 2) theta += j.grad[1] * xi[1];
    r[q] = log_two_pi_power(n) - j.value - theta - std::log(det);
    w[q] = std::exp(logmass[q] - mmax);
    lo = std::min(lo, r[q]);
    hi = std::max(hi, r[q]);
  }
  std::vector<double> wr(N), wr2(N);
  for (std::size_t q = 0; q < N; ++q) {
    wr[q] = w[q] * r[q];
  }
  const double total = pairwise_sum(w);
  const double mean = pairwise_sum(wr) / total;
  for (std::size_t q = 0; q < N; ++q) wr2[q] = w[q] * (r[q] - mean) * (r[q] - mean);
  return {pairwise_sum(wr2) / total, hi - lo};
}

PotentialDistance compare_to_soliton(const Potential& phi_p, const Potential& phi_inf,
                                     const QuadratureGrid& grid, const Potential& reference) {
  const std::vector<double> a = phi_p.values(grid.points);
  const std::vector<double> b = phi_inf.values(grid.points);
  const std::vector<double> ref = reference.values(grid.points);
  const std::size_t N = grid.size();
  std::vector<double> logm(N);
  double mmax = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < N; ++q) {
    logm[q] = grid.log_weights[q] - ref[q];
    mmax = std::max(mmax, logm[q]);
  }
  std::vector<double> w(N), wd(N);
  for (std::size_t q = 0; q < N; ++q) {
    w[q] = std::exp(logm[q] - mmax);
    wd[q] = w[q] * (a[q] - b[q]);
  }
  const double total = pairwise_sum(w);
  const double shift = pairwise_sum(wd) / total;  // difference of the two gauge means
  PotentialDistance d;
  std::vector<double> wd2(N);
  for (std::size_t q = 0; q < N; ++q) {
    const double diff = a[q] - b[q] - shift;
    d.sup = std::max(d.sup, std::abs(diff));
    wd2[q] = w[q] * diff * diff;
  }
  d.l2 = std::sqrt(pairwise_sum(wd2) / total);
  return d;
}

}  // namespace qsol
