#include "artifacts.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsol/errors.hpp"
#include "qsol/parallel.hpp"

namespace qsol::app {
namespace {

namespace fs = std::filesystem;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.filename().string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

Json scalar(const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  return v;
}

}  // namespace

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IntegrityError("sha256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

RunDirectory::RunDirectory(std::string path, std::string command, Json config)
    : path_(std::move(path)) {
  std::error_code ec;
  fs::create_directories(path_, ec);
  if (ec || !fs::is_directory(path_)) throw ConfigError("cannot create run directory " + path_);
  started_ = now_seconds();
  manifest_ = Json::object();
  manifest_["artifact"] = "qsol";
  manifest_["version"] = "0.1.0";
  manifest_["command"] = command;
  manifest_["config"] = std::move(config);
  manifest_["threads"] = thread_count();
  manifest_["started_at"] = utc_timestamp();
  manifest_["status"] = "running";
  manifest_["stages"] = Json::array();
  manifest_["files"] = Json::array();
  flush_manifest();
}

void RunDirectory::begin_stage(const std::string& name) {
  stage_started_ = now_seconds();
  manifest_["stages"].push_back({{"name", name}, {"status", "running"}});
  flush_manifest();
}

void RunDirectory::end_stage(const std::string& status, const std::string& message) {
  Json& stage = manifest_["stages"].back();
  stage["status"] = status;
  stage["seconds"] = now_seconds() - stage_started_;
  if (!message.empty()) stage["message"] = message;
  flush_manifest();
}

void RunDirectory::write(const Artifact& artifact) {
  write_file(fs::path(path_) / artifact.name, artifact.content);
  Json& files = manifest_["files"];
  for (auto& f : files) {
    if (f["name"] == artifact.name) {
      f["bytes"] = artifact.content.size();
      f["sha256"] = sha256_hex(artifact.content);
      return;
    }
  }
  files.push_back({{"name", artifact.name},
                   {"bytes", artifact.content.size()},
                   {"sha256", sha256_hex(artifact.content)}});
}

void RunDirectory::finalize(const std::string& status, const Json& summary) {
  manifest_["status"] = status;
  manifest_["finished_at"] = utc_timestamp();
  manifest_["wall_seconds"] = now_seconds() - started_;
  manifest_["summary"] = summary;
  flush_manifest();
}

void RunDirectory::flush_manifest() {
  write_file(fs::path(path_) / "manifest.json", manifest_.dump(2) + "\n");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) t.footer.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (!have_header) {
      t.header = split(line, ',');
      have_header = true;
    } else {
      t.rows.push_back(split(line, ','));
    }
  }
  return t;
}

ColumnDoc column_doc(const std::string& file, const std::string& column) {
  struct Entry {
    const char* file;
    const char* column;
    const char* description;
    const char* op;
  };
  static const Entry table[] = {
      {"*", "p", "quantization level", "config"},
      {"*", "alpha_1", "first lattice coordinate of the section exponent", "lattice_points"},
      {"*", "alpha_2", "second lattice coordinate of the section exponent", "lattice_points"},
      {"*", "index", "position of the exponent in the lexicographic basis", "lattice_points"},
      {"*", "error", "error message of a failed row (empty on success)", "row driver"},
      {"basis.csv", "n_p", "number of lattice points at level p", "lattice_points"},
      {"xi.csv", "xi_1", "first component of xi_p", "solve_xi_p"},
      {"xi.csv", "xi_2", "second component of xi_p", "solve_xi_p"},
      {"xi.csv", "gap", "|xi_p - xi_infinity|", "xi_asymptotics"},
      {"xi.csv", "iterations", "Newton iterations", "solve_xi_p"},
      {"weights_final.csv", "log_weight", "log squared norm of the monomial section", "run_flow"},
      {"residuals.csv", "iteration", "accepted step index (0 = initial product)", "run_flow"},
      {"residuals.csv", "residual", "balanced residual", "balanced_residual"},
      {"residuals.csv", "psi", "energy functional", "energy"},
      {"residuals.csv", "dt", "step size (flow) or damping factor (T-iteration)", "run_flow"},
      {"potential_samples.csv", "x_1", "first log-coordinate of the sample", "sampling grid"},
      {"potential_samples.csv", "x_2", "second log-coordinate of the sample", "sampling grid"},
      {"potential_samples.csv", "phi", "balanced potential phi_FS,H(x + xi/p)", "balanced_potential"},
      {"balance_summary.csv", "xi_1", "first component of the frozen vector field", "solve_xi_p"},
      {"balance_summary.csv", "xi_2", "second component of the frozen vector field", "solve_xi_p"},
      {"balance_summary.csv", "iterations", "accepted flow steps", "run_flow"},
      {"balance_summary.csv", "rejected", "rejected flow steps", "run_flow"},
      {"balance_summary.csv", "regrids", "grid rebuilds during the run", "run_flow"},
      {"balance_summary.csv", "converged", "1 if the residual reached flow.tol", "run_flow"},
      {"balance_summary.csv", "residual", "final balanced residual", "balanced_residual"},
      {"balance_summary.csv", "psi", "final energy", "energy"},
      {"balance_summary.csv", "futaki_direct", "max_eta |Fut_p^xi(eta)| / p^(n+1)", "quantized_futaki"},
      {"balance_summary.csv", "futaki_from_mu",
       "max_eta |(Tr/Vol) sum <a,eta> d_a mu_a| / p^(n+1)", "moment_map"},
      {"balance_summary.csv", "soliton_variance", "variance of the soliton residual", "soliton_residual"},
      {"balance_summary.csv", "soliton_oscillation", "sup - inf of the soliton residual",
       "soliton_residual"},
      {"balance_summary.csv", "distance_sup", "sup distance to the target potential",
       "compare_to_soliton"},
      {"balance_summary.csv", "distance_l2", "L2 distance to the target potential",
       "compare_to_soliton"},
      {"balance_summary.csv", "target", "round closed form or highest-p run (self-convergence)",
       "compare_to_soliton"},
      {"spectrum.csv", "k", "eigenvalue index", "gap_report"},
      {"spectrum.csv", "gamma", "channel eigenvalue gamma_k", "channel_spectrum"},
      {"spectrum.csv", "lambda", "Galerkin eigenvalue lambda_k", "tz_spectrum"},
      {"spectrum.csv", "defect", "|1 - gamma_k - lambda_k / p|", "gap_report"},
      {"spectrum.csv", "metric", "metric used at level p", "gap_report"},
      {"spectrum.csv", "tz_resolved", "1 if lambda_1 moved < 1e-4 under refinement", "tz_spectrum"},
      {"verify.csv", "check", "identity name", "run_verify"},
      {"verify.csv", "residual", "normalized residual of the identity", "run_verify"},
      {"verify.csv", "threshold", "pass threshold", "run_verify"},
      {"verify.csv", "pass", "1 if residual <= threshold", "run_verify"},
  };
  for (auto& e : table) {
    if (column == e.column && (file == e.file || std::string(e.file) == "*")) {
      return {e.description, e.op};
    }
  }
  return {"undocumented column", "unknown"};
}

CommandResult emit_report(const std::string& run_directory) {
  const fs::path dir(run_directory);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw ConfigError("no manifest.json in " + run_directory);
  }
  Json manifest;
  try {
    manifest = Json::parse(read_file(manifest_path));
  } catch (const Json::exception& e) {
    throw IntegrityError(std::string("manifest.json is not valid JSON: ") + e.what());
  }
  CommandResult result;
  std::string csv = "file,row,column,value\n";
  Json files = Json::array();
  Json summary = Json::object();
  Json verdict = Json::object();
  for (auto& entry : manifest.at("files")) {
    const std::string name = entry.at("name");
    const std::string content = read_file(dir / name);
    if (sha256_hex(content) != entry.at("sha256").get<std::string>()) {
      throw IntegrityError("checksum mismatch for " + name);
    }
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
      const Json doc = Json::parse(content);
      if (doc.contains("pass")) verdict[name] = doc["pass"];
      continue;
    }
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    const CsvTable table = parse_csv(content);
    Json columns = Json::array();
    for (auto& col : table.header) {
      const ColumnDoc doc = column_doc(name, col);
      columns.push_back({{"name", col}, {"description", doc.description},
                         {"produced_by", doc.produced_by}});
    }
    files.push_back({{"name", name}, {"rows", table.rows.size()}, {"columns", columns}});
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (std::size_t c = 0; c < table.header.size() && c < table.rows[r].size(); ++c) {
        csv += name + "," + std::to_string(r) + "," + table.header[c] + "," + table.rows[r][c] +
               "\n";
      }
    }
    if (!table.footer.empty()) {
      Json f = Json::object();
      for (auto& [k, v] : table.footer) f[k] = scalar(v);
      summary[name] = f;
    }
    if (name == "balance_summary.csv") {
      bool all = true;
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] != "converged") continue;
        for (auto& row : table.rows) all = all && c < row.size() && row[c] == "1";
      }
      verdict[name] = all;
    }
  }
  Json report = Json::object();
  report["command"] = manifest.value("command", "");
  report["config"] = manifest.value("config", Json::object());
  report["files"] = files;
  report["summary"] = summary;
  report["verdict"] = verdict;
  result.files.push_back({"report.csv", csv});
  result.files.push_back({"report.json", report.dump(2) + "\n"});
  result.summary = verdict;
  return result;
}

}  // namespace qsol::app
