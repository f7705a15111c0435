#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qsol/errors.hpp"
#include "qsol/toric.hpp"

namespace qsol::app {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

bool known_key(const std::string& key) {
  for (auto& k : key_registry()) {
    if (k.key == key) return true;
  }
  return false;
}

void check_key(const std::string& key, const std::string& origin) {
  if (!known_key(key)) {
    throw ConfigError(origin + ": unknown key '" + key + "' (did you mean '" + nearest_key(key) +
                      "'?)");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError("key '" + key + "' must be positive");
  return v;
}

std::string one_of(const std::string& key, const std::string& v,
                   const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError("key '" + key + "': '" + v + "' is not one of {" + list + "}");
  }
  return v;
}

}  // namespace

const std::vector<KeySpec>& key_registry() {
  static const std::vector<KeySpec> keys = {
      {"mode", "", "subcommand: catalog | basis | xi | balance | spectrum | verify | report"},
      {"manifold", "CP1", "preset name (see `qsol catalog`)"},
      {"p", "2", "level or inclusive range, e.g. 8, 4..12, 2,4,8"},
      {"output", "qsol_run", "run directory (a path ending in .csv names the main table)"},
      {"quad.tol", "1e-10", "relative tolerance of the adaptive quadrature"},
      {"quad.max_order", "16384", "node cap per axis"},
      {"quad.mass_cut", "46", "truncation: boundary integrand below e^-mass_cut of its maximum"},
      {"solver.tol", "1e-12", "relative gradient tolerance of the Newton solvers for xi"},
      {"flow.tol", "1e-9", "target balanced residual"},
      {"flow.max_iterations", "500", "iteration cap of the balancing flow"},
      {"flow.mode", "t_iteration", "t_iteration | gradient_flow"},
      {"flow.initial", "reference", "reference | uniform | file"},
      {"flow.weights", "", "CSV of initial log weights when flow.initial = file"},
      {"xi.policy", "xi_p", "zero | xi_p: vector field used by balance and spectrum"},
      {"spectrum.k_max", "3", "number of nontrivial eigenvalues reported"},
      {"spectrum.degree", "10", "polynomial degree of the Galerkin trial space"},
      {"verify.tol", "1e-8", "pass threshold of the identity checks"},
      {"verify.lxi_scale", "1", "scale applied to L_xi weights in the Tuynman check", true},
  };
  return keys;
}

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (auto& k : key_registry()) {
    if (k.hidden) continue;
    const std::size_t d = edit_distance(key, k.key);
    if (d < best_d) {
      best_d = d;
      best = k.key;
    }
  }
  return best;
}

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  auto fail = [&](std::size_t pos, const std::string& what) {
    throw ConfigError("invalid p range '" + text + "' at position " + std::to_string(pos) + ": " +
                      what);
  };
  auto read_int = [&](std::size_t& pos) {
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail(start, "expected a positive integer");
    int v = 0;
    const auto res = std::from_chars(text.data() + start, text.data() + pos, v);
    if (res.ec != std::errc()) fail(start, "integer out of range");
    if (v < 1) fail(start, "levels must be >= 1");
    return v;
  };
  if (trim(text).empty()) fail(0, "empty range");
  std::size_t pos = 0;
  for (;;) {
    const std::size_t item_start = pos;
    const int a = read_int(pos);
    int b = a;
    if (text.compare(pos, 2, "..") == 0) {
      pos += 2;
      b = read_int(pos);
      if (b < a) fail(item_start, "empty range " + std::to_string(a) + ".." + std::to_string(b));
    }
    for (int v = a; v <= b; ++v) out.push_back(v);
    if (pos == text.size()) break;
    if (text[pos] != ',') fail(pos, "expected ',' or '..'");
    ++pos;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    check_key(key, where);
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

RunConfig make_config(const std::map<std::string, std::string>& file_values,
                      const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> v;
  for (auto& k : key_registry()) v[k.key] = k.default_value;
  for (auto& [k, val] : file_values) {
    check_key(k, "config");
    v[k] = val;
  }
  for (auto& [k, val] : overrides) {
    check_key(k, "flag");
    v[k] = val;
  }
  RunConfig c;
  c.mode = v["mode"];
  c.manifold = v["manifold"];
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), c.manifold) == names.end()) {
    load_preset(c.manifold);  // throws CatalogError listing the presets
  }
  c.p_list = parse_range(v["p"]);
  c.output = v["output"];
  if (c.output.empty()) throw ConfigError("key 'output' must not be empty");
  c.quad_tol = positive("quad.tol", to_double("quad.tol", v["quad.tol"]));
  c.quad_max_order = to_int("quad.max_order", v["quad.max_order"]);
  if (c.quad_max_order < 32) throw ConfigError("key 'quad.max_order' must be >= 32");
  c.quad_mass_cut = positive("quad.mass_cut", to_double("quad.mass_cut", v["quad.mass_cut"]));
  c.solver_tol = positive("solver.tol", to_double("solver.tol", v["solver.tol"]));
  c.flow_tol = positive("flow.tol", to_double("flow.tol", v["flow.tol"]));
  c.flow_max_iterations = to_int("flow.max_iterations", v["flow.max_iterations"]);
  if (c.flow_max_iterations < 1) throw ConfigError("key 'flow.max_iterations' must be >= 1");
  c.flow_mode = one_of("flow.mode", v["flow.mode"], {"t_iteration", "gradient_flow"});
  c.flow_initial = one_of("flow.initial", v["flow.initial"], {"reference", "uniform", "file"});
  c.flow_weights = v["flow.weights"];
  if (c.flow_initial == "file" && c.flow_weights.empty()) {
    throw ConfigError("flow.initial = file requires flow.weights");
  }
  c.xi_policy = one_of("xi.policy", v["xi.policy"], {"zero", "xi_p"});
  c.k_max = to_int("spectrum.k_max", v["spectrum.k_max"]);
  if (c.k_max < 1) throw ConfigError("key 'spectrum.k_max' must be >= 1");
  c.tz_degree = to_int("spectrum.degree", v["spectrum.degree"]);
  if (c.tz_degree < 2) throw ConfigError("key 'spectrum.degree' must be >= 2");
  c.verify_tol = positive("verify.tol", to_double("verify.tol", v["verify.tol"]));
  c.verify_lxi_scale = to_double("verify.lxi_scale", v["verify.lxi_scale"]);
  c.values = v;
  return c;
}

}  // namespace qsol::app
