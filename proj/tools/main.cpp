#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "app/artifacts.hpp"
#include "app/commands.hpp"
#include "app/config.hpp"
#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"

namespace {

namespace fs = std::filesystem;
using namespace qsol::app;

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int run_report(const std::string& dir) {
  const CommandResult r = emit_report(dir);
  for (auto& f : r.files) {
    std::ofstream out(fs::path(dir) / f.name, std::ios::binary | std::ios::trunc);
    out << f.content;
  }
  std::cout << r.summary.dump(2) << "\n";
  return kExitOk;
}

int execute(const RunConfig& cfg) {
  if (cfg.mode == "catalog") {
    std::cout << run_catalog(cfg).files.front().content;
    return kExitOk;
  }
  if (cfg.mode == "report") return run_report(cfg.output);

  fs::path dir = cfg.output;
  std::string main_name;
  if (dir.extension() == ".csv") {
    main_name = dir.filename().string();
    dir = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  }
  Json echo = Json::object();
  for (auto& [k, v] : cfg.values) echo[k] = v;
  RunDirectory run(dir.string(), cfg.mode, echo);
  run.begin_stage(cfg.mode);
  CommandResult result;
  try {
    result = run_command(cfg);
  } catch (const qsol::Error& e) {
    run.end_stage("failed", e.what());
    run.finalize("failed", Json::object());
    throw;
  }
  if (!main_name.empty() && !result.files.empty()) result.files.front().name = main_name;
  for (auto& f : result.files) run.write(f);
  run.end_stage(result.exit_code == 0 ? "ok" : "failed");
  run.finalize(result.exit_code == 0 ? "ok" : "failed", result.summary);
  std::cout << result.summary.dump(2) << "\n";
  std::cerr << "qsol: wrote " << run.path() << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsol: relative balanced metrics and quantized solitons on toric Fano manifolds"};
  app.require_subcommand(0, 1);

  std::string config_path, manifold, p, mode, out, weights, xi_policy;
  double quad_tol = 0, solver_tol = 0, flow_tol = 0, tol = 0;
  int threads = 0;
  std::vector<std::string> sets;
  auto* o_config = app.add_option("--config", config_path, "key = value configuration file");
  auto* o_manifold = app.add_option("--manifold", manifold, "preset name");
  auto* o_p = app.add_option("--p", p, "level or range (8, 4..12, 2,4,8)");
  app.add_option("--mode", mode, "mode when no subcommand is given");
  auto* o_out = app.add_option("--out", out, "run directory, or path of the main CSV");
  auto* o_quad = app.add_option("--quad-tol", quad_tol, "quadrature tolerance");
  auto* o_solver = app.add_option("--solver-tol", solver_tol, "Newton tolerance for xi");
  auto* o_flow = app.add_option("--flow-tol", flow_tol, "target balanced residual");
  auto* o_tol = app.add_option("--tol", tol, "main tolerance of the subcommand");
  auto* o_weights = app.add_option("--weights", weights, "initial log weights CSV");
  auto* o_policy = app.add_option("--xi-policy", xi_policy, "zero | xi_p");
  auto* o_threads = app.add_option("--threads", threads, "worker threads (overrides QSOL_THREADS)");
  app.add_option("--set", sets, "override any key: --set key=value (repeatable)");

  std::string report_dir;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"catalog", "print the preset table"},
      {"basis", "enumerate section bases"},
      {"xi", "soliton vector fields xi_p and xi_infinity"},
      {"balance", "relative balanced metrics by the T-iteration or gradient flow"},
      {"spectrum", "channel spectrum against the weighted Laplacian"},
      {"verify", "exact identity suite with a JSON verdict"},
      {"report", "consolidate a run directory into report.csv and report.json"}};
  for (auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (name == "report") sub->add_option("dir", report_dir, "run directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::map<std::string, std::string> overrides;
    std::string chosen;
    for (auto* sub : app.get_subcommands()) chosen = sub->get_name();
    if (chosen.empty()) chosen = mode;
    if (chosen.empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }
    overrides["mode"] = chosen;
    if (*o_manifold) overrides["manifold"] = manifold;
    if (*o_p) overrides["p"] = p;
    if (*o_out) overrides["output"] = out;
    if (!report_dir.empty()) overrides["output"] = report_dir;
    if (*o_quad) overrides["quad.tol"] = fmt(quad_tol);
    if (*o_solver) overrides["solver.tol"] = fmt(solver_tol);
    if (*o_flow) overrides["flow.tol"] = fmt(flow_tol);
    if (*o_weights) {
      overrides["flow.weights"] = weights;
      overrides["flow.initial"] = "file";
    }
    if (*o_policy) overrides["xi.policy"] = xi_policy;
    if (*o_tol) {
      const std::string key = chosen == "xi"       ? "solver.tol"
                              : chosen == "verify" ? "verify.tol"
                                                   : "flow.tol";
      overrides[key] = fmt(tol);
    }
    for (auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw qsol::ConfigError("--set expects key=value, got '" + s + "'");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    const auto file_values = *o_config ? load_config_file(config_path)
                                       : std::map<std::string, std::string>{};
    const RunConfig cfg = make_config(file_values, overrides);
    if (*o_threads) qsol::set_thread_count(threads);
    return execute(cfg);
  } catch (const qsol::ConfigError& e) {
    std::cerr << "qsol: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qsol::CatalogError& e) {
    std::cerr << "qsol: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qsol::IntegrityError& e) {
    std::cerr << "qsol: integrity error: " << e.what() << "\n";
    return kExitCheck;
  } catch (const std::exception& e) {
    std::cerr << "qsol: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}
