#pragma once

#include <map>
#include <string>
#include <vector>

namespace qsol::app {

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string description;
  bool hidden = false;
};

/// Every accepted configuration key with its default.
const std::vector<KeySpec>& key_registry();

/// Closest visible key by edit distance.
std::string nearest_key(const std::string& key);

/// Inclusive integer ranges: "8", "4..12", "2,4,8", "2,5..7".
/// Throws ConfigError with the offending position.
std::vector<int> parse_range(const std::string& text);

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError for
/// malformed lines and unknown keys.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin = "config");

struct RunConfig {
  std::string mode;
  std::string manifold = "CP1";
  std::vector<int> p_list{2};
  double quad_tol = 1e-10;
  int quad_max_order = 1 << 14;
  double quad_mass_cut = 46.0;
  double solver_tol = 1e-12;
  double flow_tol = 1e-9;
  int flow_max_iterations = 500;
  std::string flow_mode = "t_iteration";
  std::string flow_initial = "reference";
  std::string flow_weights;
  std::string xi_policy = "xi_p";
  int k_max = 3;
  int tz_degree = 10;
  double verify_tol = 1e-8;
  double verify_lxi_scale = 1.0;
  std::string output = "qsol_run";
  std::map<std::string, std::string> values;  // effective key = value echo
};

/// Layers defaults, then `file_values`, then `overrides`; validates and
/// converts. Throws ConfigError.
RunConfig make_config(const std::map<std::string, std::string>& file_values,
                      const std::map<std::string, std::string>& overrides);

/// Reads and parses a config file.
std::map<std::string, std::string> load_config_file(const std::string& path);

}  // namespace qsol::app
