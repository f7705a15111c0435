#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace qsol::app {

using Json = nlohmann::ordered_json;

/// Shortest round-trip representation (17 significant digits).
std::string fmt(double v);

/// Hex sha256 digest.
std::string sha256_hex(const std::string& data);

struct Artifact {
  std::string name;
  std::string content;
};

/// Output of one subcommand before it touches the file system.
struct CommandResult {
  std::vector<Artifact> files;
  Json summary = Json::object();
  int exit_code = 0;
};

/// Run directory: manifest.json is written when the run starts and
/// finalized with the file inventory when it ends.
class RunDirectory {
 public:
  RunDirectory(std::string path, std::string command, Json config);
  void begin_stage(const std::string& name);
  void end_stage(const std::string& status, const std::string& message = {});
  void write(const Artifact& artifact);
  void finalize(const std::string& status, const Json& summary);
  const std::string& path() const { return path_; }

 private:
  void flush_manifest();
  std::string path_;
  Json manifest_;
  double started_ = 0.0;
  double stage_started_ = 0.0;
};

/// Tab-free CSV parsing of the files written here: header line, data rows,
/// and trailing `# key = value` summary lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> footer;
};
CsvTable parse_csv(const std::string& text);

/// Column documentation: description and the operation that produced it.
struct ColumnDoc {
  std::string description;
  std::string produced_by;
};
ColumnDoc column_doc(const std::string& file, const std::string& column);

/// Verifies the manifest inventory and writes report.csv (long format:
/// file,row,column,value) and report.json. Throws IntegrityError naming the
/// file on a checksum mismatch. Output depends only on the inventoried files.
CommandResult emit_report(const std::string& run_directory);

}  // namespace qsol::app
