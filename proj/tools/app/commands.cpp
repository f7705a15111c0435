#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "qsol/balance.hpp"
#include "qsol/errors.hpp"
#include "qsol/numerics.hpp"
#include "qsol/quantization.hpp"
#include "qsol/soliton_fields.hpp"
#include "qsol/spectral.hpp"
#include "qsol/toric.hpp"

namespace qsol::app {
namespace {

std::string alpha_header(int n) { return n == 1 ? "alpha_1" : "alpha_1,alpha_2"; }

std::string alpha_cells(const SectionBasis& basis, std::size_t i) {
  std::string s = std::to_string(basis.points[i][0]);
  if (basis.dimension == 2) s += "," + std::to_string(basis.points[i][1]);
  return s;
}

std::string footer(const std::string& key, double value) { return "# " + key + " = " + fmt(value) + "\n"; }

std::string sanitize(std::string message) {
  std::replace(message.begin(), message.end(), ',', ';');
  std::replace(message.begin(), message.end(), '\n', ' ');
  return message;
}

double norm(const TorusVector& v) { return std::hypot(v[0], v[1]); }

TorusVector coordinate(int i) {
  TorusVector e{0.0, 0.0};
  e[i] = 1.0;
  return e;
}

// Deterministic test vector field of moderate size.
TorusVector test_xi(int n) { return n == 1 ? TorusVector{0.7, 0.0} : TorusVector{0.6, -0.35}; }

// Fubini-Study potential of level 2 with seeded random weights: a generic
// invariant metric that is neither balanced nor symmetric.
Potential random_potential(const ReflexivePolytope& polytope, std::uint64_t seed) {
  const SectionBasis b = lattice_points(polytope, 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> offsets(b.size());
  for (auto& o : offsets) o = u(rng);
  return Potential::log_sum_exp(polytope.dimension(), b.points, offsets, 2.0,
                                PotentialKind::fubini_study, "random level-2 Fubini-Study");
}

std::vector<RealPoint> sample_points(int n) {
  std::vector<RealPoint> xs;
  if (n == 1) {
    for (int i = -20; i <= 20; ++i) xs.push_back({0.5 * i, 0.0});
  } else {
    for (int i = -6; i <= 6; ++i) {
      for (int j = -6; j <= 6; ++j) xs.push_back({1.0 * i, 1.0 * j});
    }
  }
  return xs;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read weights file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Signed integral of f * exp(log_g) over the grid.
double signed_integral(const QuadratureGrid& grid, const std::vector<double>& f,
                       const std::vector<double>& log_g) {
  double shift = -INFINITY;
  for (std::size_t q = 0; q < f.size(); ++q) shift = std::max(shift, grid.log_weights[q] + log_g[q]);
  std::vector<double> terms(f.size());
  for (std::size_t q = 0; q < f.size(); ++q) {
    terms[q] = f[q] * std::exp(grid.log_weights[q] + log_g[q] - shift);
  }
  return pairwise_sum(terms) * std::exp(shift);
}

struct Check {
  std::string name;
  int p = 0;
  double residual = 0.0;
  std::string error;
};

std::vector<Check> verify_level(const RunConfig& config, const ReflexivePolytope& polytope, int p) {
  std::vector<Check> out;
  auto guarded = [&](const std::string& name, auto&& body) {
    Check c{name, p, 0.0, {}};
    try {
      c.residual = body();
    } catch (const std::exception& e) {
      c.residual = INFINITY;
      c.error = e.what();
    }
    out.push_back(c);
  };
  const int n = polytope.dimension();
  const SectionBasis basis = lattice_points(polytope, p);
  const TorusVector xi = test_xi(n);
  const Potential phi = random_potential(polytope, 20261018u);
  QuadratureOptions qopt = quadrature_options(config);
  qopt.margin = norm(xi) / p;

  QuadratureGrid grid;
  InvariantProduct h;
  std::vector<double> phi_nodes;
  try {
    grid = build_grid(phi, polytope, basis, qopt);
    phi_nodes = phi.values(grid.points);
    h = gram_from_nodes(phi_nodes, basis, grid);
  } catch (const std::exception& e) {
    out.push_back({"setup", p, INFINITY, e.what()});
    return out;
  }
  const std::size_t N = grid.size();
  std::vector<double> theta(N), minus_phi(N);
  for (std::size_t q = 0; q < N; ++q) {
    const PotentialJet j = phi.jet(grid.points[q]);
    theta[q] = j.grad[0] * xi[0] + (n == 2 ? j.grad[1] * xi[1] : 0.0);
    minus_phi[q] = -phi_nodes[q];
  }

  guarded("tuynman", [&] {
    const DiagonalObservable t = toeplitz_nodes(theta, h, phi_nodes, grid);
    double worst = 0.0, scale = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const double weight = config.verify_lxi_scale * basis.dot(a, xi.data());
      worst = std::max(worst, std::abs((p + 1.0) * t.values[a] - weight));
      scale = std::max(scale, std::abs(basis.dot(a, xi.data())));
    }
    return worst / scale;
  });

  guarded("duality", [&] {
    std::mt19937_64 rng(7u + p);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DiagonalObservable A;
    A.values.resize(basis.size());
    double a_norm = 0.0;
    for (auto& v : A.values) {
      v = u(rng);
      a_norm += std::abs(v);
    }
    std::vector<double> f(N), fs(N), log_g(N);
    double f_sup = 0.0;
    for (std::size_t q = 0; q < N; ++q) {
      const RealPoint& x = grid.points[q];
      f[q] = std::cos(x[0]) + 0.5 * std::sin(0.7 * x[1] + 0.3);
      f_sup = std::max(f_sup, std::abs(f[q]));
      fs[q] = f[q] * berezin_symbol(A, h, x);
      // rho dnu density: exp(p phi_FS - (p+1) phi) (2 pi)^n
      log_g[q] = std::log(rawnsley(h, phi, x)) - phi_nodes[q] + log_two_pi_power(n);
    }
    const DiagonalObservable tf = toeplitz_nodes(f, h, phi_nodes, grid);
    double lhs = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a) lhs += tf.values[a] * A.values[a];
    const double rhs = signed_integral(grid, fs, log_g);
    return std::abs(lhs - rhs) / (a_norm * f_sup);
  });

  guarded("theta_mean_zero", [&] {
    std::vector<double> abs_theta(N);
    for (std::size_t q = 0; q < N; ++q) abs_theta[q] = std::abs(theta[q]);
    const double signed_part = signed_integral(grid, theta, minus_phi);
    const double mass = signed_integral(grid, abs_theta, minus_phi);
    return std::abs(signed_part) / mass;
  });

  guarded("toeplitz_unit", [&] {
    const DiagonalObservable t1 = toeplitz_nodes(std::vector<double>(N, 1.0), h, phi_nodes, grid);
    double worst = 0.0;
    for (double v : t1.values) worst = std::max(worst, std::abs(v - 1.0));
    return worst;
  });

  guarded("rawnsley_trace", [&] {
    std::vector<double> log_g(N);
    for (std::size_t q = 0; q < N; ++q) {
      log_g[q] = std::log(rawnsley(h, phi, grid.points[q])) - phi_nodes[q] + log_two_pi_power(n);
    }
    return std::abs(integrate_log(grid, log_g).value / basis.size() - 1.0);
  });

  // Identities of the relative moment map hold at every product, so they are
  // evaluated at the (unbalanced) Gram product with the test vector field.
  try {
    const Potential twisted = balanced_potential(h, xi);
    QuadratureOptions mopt = quadrature_options(config);
    const QuadratureGrid mgrid = build_grid(twisted, polytope, basis, mopt);
    const DiagonalObservable mu = moment_map(h, xi, mgrid);
    const std::vector<double> d = twist_weights(basis, xi);
    const double vol = std::exp(log_volume(twisted, mgrid));
    const double tr = std::exp(log_twisted_trace(basis, xi));
    guarded("mu_twisted_trace", [&] {
      std::vector<double> terms(basis.size());
      for (std::size_t a = 0; a < basis.size(); ++a) terms[a] = d[a] * mu.values[a];
      return std::abs(pairwise_sum(terms)) / vol;
    });
    guarded("mu_futaki_pairing", [&] {
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const TorusVector eta = coordinate(i);
        double pairing = 0.0, scale = 0.0;
        for (std::size_t a = 0; a < basis.size(); ++a) {
          pairing += basis.dot(a, eta.data()) * d[a] * mu.values[a];
          scale += std::abs(basis.dot(a, eta.data())) * d[a];
        }
        const double fut = quantized_futaki(basis, xi, eta);
        worst = std::max(worst, std::abs(pairing + vol / tr * fut) / (vol / tr * scale));
      }
      return worst;
    });
  } catch (const std::exception& e) {
    out.push_back({"mu_setup", p, INFINITY, e.what()});
  }

  try {
    const ChannelMatrix channel = channel_matrix(h, phi, xi, grid);
    guarded("channel_unitality", [&] { return channel.unitality_defect; });
    guarded("channel_symmetrizability", [&] { return channel.symmetry_defect; });
    guarded("channel_spectral_range", [&] {
      const ChannelSpectrum spec = channel_spectrum(channel, config.quad_tol);
      const double lo = spec.eigenvalues.back(), hi = spec.eigenvalues.front();
      return std::max({0.0, -lo, hi - 1.0});
    });
  } catch (const std::exception& e) {
    out.push_back({"channel_setup", p, INFINITY, e.what()});
  }

  guarded("berezin_markov", [&] {
    auto f = [](const RealPoint& x) { return std::tanh(x[0] - 0.3 * x[1]); };
    const std::vector<RealPoint> xs = sample_points(n);
    const std::vector<double> bf = berezin_transform(f, h, phi, grid, xs);
    double excess = 0.0;
    for (double v : bf) excess = std::max({excess, v - 1.0, -1.0 - v});
    const std::vector<double> b1 =
        berezin_transform([](const RealPoint&) { return 1.0; }, h, phi, grid, xs);
    for (double v : b1) excess = std::max(excess, std::abs(v - 1.0));
    return excess;
  });
  return out;
}

}  // namespace

QuadratureOptions quadrature_options(const RunConfig& config) {
  QuadratureOptions o;
  o.tol = config.quad_tol;
  o.max_order = config.quad_max_order;
  o.mass_cut = config.quad_mass_cut;
  return o;
}

CommandResult run_catalog(const RunConfig&) {
  CommandResult r;
  r.files.push_back({"catalog.txt", catalog_table()});
  r.summary["presets"] = preset_names();
  return r;
}

CommandResult run_basis(const RunConfig& config) {
  const ReflexivePolytope polytope = load_preset(config.manifold);
  CommandResult r;
  std::string csv = "p,index," + alpha_header(polytope.dimension()) + "\n";
  Json counts = Json::object();
  for (int p : config.p_list) {
    const SectionBasis b = lattice_points(polytope, p);
    for (std::size_t i = 0; i < b.size(); ++i) {
      csv += std::to_string(p) + "," + std::to_string(i) + "," + alpha_cells(b, i) + "\n";
    }
    counts[std::to_string(p)] = b.size();
  }
  r.files.push_back({"basis.csv", csv});
  r.summary["n_p"] = counts;
  return r;
}

CommandResult run_xi(const RunConfig& config) {
  const ReflexivePolytope polytope = load_preset(config.manifold);
  const XiAsymptotics xa = xi_asymptotics(polytope, config.p_list, config.solver_tol);
  CommandResult r;
  std::string csv = "p,xi_1,xi_2,gap,iterations,error\n";
  bool failed = false;
  for (auto& row : xa.rows) {
    csv += std::to_string(row.p) + "," + fmt(row.xi_p[0]) + "," + fmt(row.xi_p[1]) + "," +
           fmt(row.gap) + "," + std::to_string(row.iterations) + "," + sanitize(row.error) + "\n";
    failed = failed || !row.error.empty();
  }
  csv += footer("xi_infinity_1", xa.xi_infinity[0]);
  csv += footer("xi_infinity_2", xa.xi_infinity[1]);
  csv += footer("slope", xa.fit.slope);
  csv += footer("intercept", xa.fit.intercept);
  csv += footer("fit_points", xa.fit.points);
  r.files.push_back({"xi.csv", csv});
  r.summary = {{"xi_infinity", {xa.xi_infinity[0], xa.xi_infinity[1]}},
               {"slope", xa.fit.slope},
               {"fit_points", xa.fit.points}};
  r.exit_code = failed ? 3 : 0;
  return r;
}

CommandResult run_balance(const RunConfig& config) {
  const ReflexivePolytope polytope = load_preset(config.manifold);
  const int n = polytope.dimension();
  const QuadratureOptions qopt = quadrature_options(config);

  struct Level {
    int p = 0;
    TorusVector xi{};
    std::optional<FlowState> state;
    std::optional<Potential> phi;
    double futaki_direct = NAN, futaki_mu = NAN;
    SolitonResidual soliton{NAN, NAN};
    PotentialDistance distance{NAN, NAN};
    std::string error;
  };
  std::vector<Level> levels;
  for (int p : config.p_list) {
    Level L;
    L.p = p;
    try {
      const SectionBasis basis = lattice_points(polytope, p);
      if (config.xi_policy == "xi_p") L.xi = solve_xi_p(basis, config.solver_tol).solution;
      BalanceConfig bc;
      bc.manifold = config.manifold;
      bc.p = p;
      bc.xi = L.xi;
      bc.mode = config.flow_mode == "gradient_flow" ? FlowMode::gradient_flow : FlowMode::t_iteration;
      bc.tolerance = config.flow_tol;
      bc.max_iterations = config.flow_max_iterations;
      bc.quadrature = qopt;
      if (config.flow_initial == "uniform") bc.initial = InitialProduct::uniform_weights;
      if (config.flow_initial == "file") {
        bc.initial = InitialProduct::file;
        bc.initial_product = product_from_csv(read_text(config.flow_weights), basis);
      }
      L.state = run_flow(bc);
      const FlowState& st = *L.state;
      L.phi = balanced_potential(st.product, L.xi);
      const double scale = std::pow(static_cast<double>(p), n + 1);
      const DiagonalObservable mu = moment_map(st.product, L.xi, st.grid);
      const std::vector<double> d = twist_weights(basis, L.xi);
      const double vol = std::exp(log_volume(*L.phi, st.grid));
      const double tr = std::exp(log_twisted_trace(basis, L.xi));
      L.futaki_direct = 0.0;
      L.futaki_mu = 0.0;
      for (int i = 0; i < n; ++i) {
        const TorusVector eta = coordinate(i);
        double pairing = 0.0;
        for (std::size_t a = 0; a < basis.size(); ++a) {
          pairing += basis.dot(a, eta.data()) * d[a] * mu.values[a];
        }
        L.futaki_direct =
            std::max(L.futaki_direct, std::abs(quantized_futaki(basis, L.xi, eta)) / scale);
        L.futaki_mu = std::max(L.futaki_mu, std::abs(tr / vol * pairing) / scale);
      }
      L.soliton = soliton_residual(*L.phi, L.xi, st.grid);
    } catch (const Error& e) {
      L.error = e.what();
    }
    levels.push_back(std::move(L));
  }

  // Distance to the soliton: the round metric on CP1, otherwise the
  // highest-level run (self-convergence).
  const bool round_target = config.manifold == "CP1";
  std::optional<Potential> target;
  if (round_target) {
    target = Potential::round_cp1();
  } else {
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      if (it->phi) {
        target = *it->phi;
        break;
      }
    }
  }
  if (target) {
    const Potential reference = reference_potential(polytope);
    const QuadratureGrid cgrid = build_grid(reference, polytope, lattice_points(polytope, 1), qopt);
    for (auto& L : levels) {
      if (L.phi) L.distance = compare_to_soliton(*L.phi, *target, cgrid, reference);
    }
  }

  CommandResult r;
  std::string weights = "p," + alpha_header(n) + ",log_weight\n";
  std::string residuals = "p,iteration,residual,psi,dt\n";
  std::string samples = std::string("p,") + (n == 1 ? "x_1" : "x_1,x_2") + ",phi\n";
  std::string summary =
      "p,xi_1,xi_2,iterations,rejected,regrids,converged,residual,psi,futaki_direct,"
      "futaki_from_mu,soliton_variance,soliton_oscillation,distance_sup,distance_l2,target,error\n";
  bool ok = true;
  Json rows = Json::array();
  for (auto& L : levels) {
    const std::string ps = std::to_string(L.p);
    if (!L.state) {
      ok = false;
      summary += ps + "," + fmt(L.xi[0]) + "," + fmt(L.xi[1]) +
                 ",0,0,0,0,nan,nan,nan,nan,nan,nan,nan,nan,," + sanitize(L.error) + "\n";
      rows.push_back({{"p", L.p}, {"error", L.error}});
      continue;
    }
    const FlowState& st = *L.state;
    for (std::size_t i = 0; i < st.product.size(); ++i) {
      weights += ps + "," + alpha_cells(st.product.basis, i) + "," + fmt(st.product.log_weights[i]) + "\n";
    }
    for (std::size_t i = 0; i < st.residuals.size(); ++i) {
      residuals += ps + "," + std::to_string(i) + "," + fmt(st.residuals[i]) + "," +
                   fmt(st.energies[i]) + "," + fmt(st.steps[i]) + "\n";
    }
    for (auto& x : sample_points(n)) {
      samples += ps + "," + fmt(x[0]) + (n == 2 ? "," + fmt(x[1]) : std::string()) + "," +
                 fmt(L.phi->value(x)) + "\n";
    }
    const double final_residual = *std::min_element(st.residuals.begin(), st.residuals.end());
    const std::string target_name = round_target ? "round" : "self_p" + std::to_string(levels.back().p);
    summary += ps + "," + fmt(L.xi[0]) + "," + fmt(L.xi[1]) + "," + std::to_string(st.iterations) +
               "," + std::to_string(st.rejected_steps) + "," + std::to_string(st.regrids) + "," +
               (st.converged ? "1" : "0") + "," + fmt(final_residual) + "," +
               fmt(st.energies.back()) + "," + fmt(L.futaki_direct) + "," + fmt(L.futaki_mu) + "," +
               fmt(L.soliton.variance) + "," + fmt(L.soliton.oscillation) + "," +
               fmt(L.distance.sup) + "," + fmt(L.distance.l2) + "," + target_name + "," +
               sanitize(L.error) + "\n";
    ok = ok && st.converged && L.error.empty();
    rows.push_back({{"p", L.p},
                    {"iterations", st.iterations},
                    {"converged", st.converged},
                    {"residual", final_residual}});
  }
  r.files.push_back({"balance_summary.csv", summary});
  r.files.push_back({"weights_final.csv", weights});
  r.files.push_back({"residuals.csv", residuals});
  r.files.push_back({"potential_samples.csv", samples});
  r.summary["levels"] = rows;
  r.exit_code = ok ? 0 : 3;
  return r;
}

CommandResult run_spectrum(const RunConfig& config) {
  GapOptions go;
  go.quadrature = quadrature_options(config);
  go.flow_tol = config.flow_tol;
  go.flow_max_iterations = config.flow_max_iterations;
  go.solver_tol = config.solver_tol;
  go.k_max = config.k_max;
  go.tz_degree = config.tz_degree;
  const XiPolicy policy = config.xi_policy == "zero" ? XiPolicy::zero : XiPolicy::xi_p;
  const GapReport rep = gap_report(config.manifold, policy, config.p_list, go);
  CommandResult r;
  std::string csv = "p,k,gamma,lambda,defect,metric,tz_resolved,error\n";
  bool failed = false;
  for (auto& row : rep.rows) {
    if (!row.error.empty()) {
      failed = true;
      csv += std::to_string(row.p) + ",,,,," + row.metric + ",," + sanitize(row.error) + "\n";
      continue;
    }
    for (std::size_t k = 0; k < row.gamma.size(); ++k) {
      csv += std::to_string(row.p) + "," + std::to_string(k) + "," + fmt(row.gamma[k]) + "," +
             fmt(row.lambda[k]) + "," + fmt(row.defect[k]) + "," + row.metric + "," +
             (row.tz_resolved ? "1" : "0") + ",\n";
    }
    failed = failed || !row.tz_resolved;
  }
  Json slopes = Json::object();
  for (std::size_t k = 0; k < rep.slopes.size(); ++k) {
    csv += footer("slope_k" + std::to_string(k), rep.slopes[k].slope);
    slopes[std::to_string(k)] = rep.slopes[k].slope;
  }
  r.files.push_back({"spectrum.csv", csv});
  r.summary["slopes"] = slopes;
  r.exit_code = failed ? 3 : 0;
  return r;
}

CommandResult run_verify(const RunConfig& config) {
  const ReflexivePolytope polytope = load_preset(config.manifold);
  std::vector<Check> checks;
  for (int p : config.p_list) {
    auto level = verify_level(config, polytope, p);
    checks.insert(checks.end(), level.begin(), level.end());
  }
  CommandResult r;
  std::string csv = "check,p,residual,threshold,pass,error\n";
  Json list = Json::array();
  bool all = true;
  for (auto& c : checks) {
    const bool pass = c.error.empty() && c.residual <= config.verify_tol;
    all = all && pass;
    csv += c.name + "," + std::to_string(c.p) + "," + fmt(c.residual) + "," + fmt(config.verify_tol) +
           "," + (pass ? "1" : "0") + "," + sanitize(c.error) + "\n";
    Json j = {{"name", c.name}, {"p", c.p}, {"residual", std::isfinite(c.residual) ? Json(c.residual) : Json(nullptr)},
              {"threshold", config.verify_tol}, {"pass", pass}};
    if (!c.error.empty()) j["error"] = c.error;
    list.push_back(j);
  }
  Json verdict = {{"manifold", config.manifold}, {"p", config.p_list}, {"checks", list}, {"pass", all}};
  r.files.push_back({"verify.csv", csv});
  r.files.push_back({"verify.json", verdict.dump(2) + "\n"});
  r.summary = verdict;
  r.exit_code = all ? 0 : 1;
  return r;
}

CommandResult run_command(const RunConfig& config) {
  if (config.mode == "catalog") return run_catalog(config);
  if (config.mode == "basis") return run_basis(config);
  if (config.mode == "xi") return run_xi(config);
  if (config.mode == "balance") return run_balance(config);
  if (config.mode == "spectrum") return run_spectrum(config);
  if (config.mode == "verify") return run_verify(config);
  throw ConfigError("unknown mode '" + config.mode + "'");
}

}  // namespace qsol::app
