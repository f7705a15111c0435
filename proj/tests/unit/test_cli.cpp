#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "app/artifacts.hpp"
#include "app/commands.hpp"
#include "app/config.hpp"
#include "qsol/errors.hpp"

using namespace qsol::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qsol_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log = "/dev/null") {
  const std::string cmd = std::string(QSOL_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const qsol::ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("range grammar") {
  CHECK(parse_range("8") == std::vector<int>{8});
  CHECK(parse_range("4..12") == std::vector<int>{4, 5, 6, 7, 8, 9, 10, 11, 12});
  CHECK(parse_range("2,4,8") == std::vector<int>{2, 4, 8});
  CHECK(parse_range("2,5..7") == std::vector<int>{2, 5, 6, 7});
  for (const char* bad : {"", "4..", "..4", "12..4", "a", "0", "3,x", "1...3"}) {
    CHECK_THROWS_AS(parse_range(bad), qsol::ConfigError);
  }
  CHECK(error_of([] { parse_range("4,7..x"); }).find("position") != std::string::npos);
}

TEST_CASE("unknown keys name the nearest valid key") {
  const std::string msg = error_of([] { parse_config_text("quad.tl = 1e-9\n", "run.cfg"); });
  CHECK(msg.find("quad.tl") != std::string::npos);
  CHECK(msg.find("quad.tol") != std::string::npos);
  CHECK(msg.find("run.cfg:1") != std::string::npos);
  CHECK(nearest_key("flow.tool") == "flow.tol");
  CHECK_THROWS_AS(make_config({}, {{"solvr.tol", "1"}}), qsol::ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words\n"), qsol::ConfigError);
}

TEST_CASE("defaults, precedence and validation") {
  const auto c = make_config({}, {{"manifold", "CP1"}, {"p", "8"}, {"mode", "balance"}});
  CHECK(c.p_list == std::vector<int>{8});
  CHECK(c.quad_tol == 1e-10);
  CHECK(c.flow_tol == 1e-9);
  CHECK(c.solver_tol == 1e-12);
  CHECK(c.values.at("flow.tol") == "1e-9");

  const auto file = parse_config_text("# comment\nquad.tol = 1e-8\nmanifold = dP8  # trailing\n");
  const auto d = make_config(file, {{"mode", "xi"}, {"quad.tol", "1e-10"}});
  CHECK(d.quad_tol == 1e-10);
  CHECK(d.manifold == "dP8");

  CHECK_THROWS_AS(make_config({}, {{"mode", "balance"}, {"p", ""}}), qsol::ConfigError);
  CHECK_THROWS_AS(make_config({}, {{"mode", "balance"}, {"quad.tol", "-1"}}), qsol::ConfigError);
  CHECK_THROWS_AS(make_config({}, {{"mode", "balance"}, {"flow.mode", "sideways"}}), qsol::ConfigError);
  CHECK_THROWS_AS(make_config({}, {{"mode", "balance"}, {"manifold", "CP3"}}), qsol::Error);
}

TEST_CASE("sha256 and csv helpers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(fmt(0.1) == "0.10000000000000001");
  const auto t = parse_csv("a,b\n1,2\n3,4\n# slope = -1.5\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  REQUIRE(t.footer.size() == 1);
  CHECK(t.footer[0].first == "slope");
  CHECK(t.footer[0].second == "-1.5");
}

TEST_CASE("verify exit codes") {
  const auto dir = scratch("verify");
  CHECK(run_cli("verify --manifold CP1 --p 4 --out " + dir.string()) == 0);
  const auto verdict = Json::parse(slurp(dir / "verify.json"));
  CHECK(verdict["pass"] == true);
  const auto bad = scratch("verify_bad");
  CHECK(run_cli("verify --manifold CP1 --p 4 --set verify.lxi_scale=2 --out " + bad.string()) == 1);
  const auto v2 = Json::parse(slurp(bad / "verify.json"));
  CHECK(v2["pass"] == false);
  bool tuynman_failed = false;
  for (auto& c : v2["checks"]) {
    if (c["name"] == "tuynman") tuynman_failed = c["pass"] == false;
    else CHECK(c["pass"] == true);
  }
  CHECK(tuynman_failed);

  CHECK(run_cli("verify --manifold CP1 --p \"\"") == 2);
  CHECK(run_cli("verify --manifold CP9 --p 2") == 2);
  CHECK(run_cli("balance --no-such-flag") == 2);
  CHECK(run_cli("--set quad.tl=1 verify --p 2") == 2);
  CHECK(run_cli("") == 2);
}

TEST_CASE("manifest, report and integrity") {
  const auto dir = scratch("balance");
  REQUIRE(run_cli("balance --manifold CP1 --p 2..3 --out " + dir.string()) == 0);
  const auto manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["command"] == "balance");
  CHECK(manifest["config"]["quad.tol"] == "1e-10");
  CHECK(manifest["files"].size() >= 4);
  for (auto& f : manifest["files"]) {
    CHECK(sha256_hex(slurp(dir / f["name"].get<std::string>())) == f["sha256"]);
  }

  REQUIRE(run_cli("report " + dir.string()) == 0);
  const std::string csv1 = slurp(dir / "report.csv"), json1 = slurp(dir / "report.json");
  REQUIRE(run_cli("report " + dir.string()) == 0);
  CHECK(slurp(dir / "report.csv") == csv1);
  CHECK(slurp(dir / "report.json") == json1);
  CHECK(csv1.find("residuals.csv,0,psi,") != std::string::npos);
  CHECK(csv1.find("residuals.csv,0,residual,") != std::string::npos);
  const auto report = Json::parse(json1);
  CHECK(report["verdict"]["balance_summary.csv"] == true);
  for (auto& f : report["files"]) {
    for (auto& c : f["columns"]) {
      CHECK(!c["description"].get<std::string>().empty());
      CHECK(!c["produced_by"].get<std::string>().empty());
    }
  }

  // Identical configuration, identical payloads.
  const auto again = scratch("balance_again");
  REQUIRE(run_cli("balance --manifold CP1 --p 2..3 --threads 1 --out " + again.string()) == 0);
  for (auto& f : manifest["files"]) {
    const std::string name = f["name"];
    CHECK(slurp(dir / name) == slurp(again / name));
  }

  {
    std::ofstream out(dir / "residuals.csv", std::ios::app);
    out << "tampered\n";
  }
  const fs::path log = dir.parent_path() / "tamper.log";
  CHECK(run_cli("report " + dir.string(), log) == 1);
  CHECK(slurp(log).find("residuals.csv") != std::string::npos);
  CHECK_THROWS_AS(emit_report(dir.string()), qsol::IntegrityError);
}

TEST_CASE("spectrum report carries slopes; xi writes to a csv path") {
  const auto dir = scratch("spectrum");
  REQUIRE(run_cli("spectrum --manifold CP1 --xi-policy zero --p 5,7,9 --out " + dir.string()) == 0);
  REQUIRE(run_cli("report " + dir.string()) == 0);
  const auto report = Json::parse(slurp(dir / "report.json"));
  CHECK(report["summary"]["spectrum.csv"].contains("slope_k1"));
  CHECK(report["summary"]["spectrum.csv"]["slope_k1"].get<double>() < -1.5);

  const auto xdir = scratch("xi");
  REQUIRE(run_cli("xi --manifold dP8 --p 4..12 --tol 1e-12 --out " + (xdir / "xi.csv").string()) == 0);
  const auto t = parse_csv(slurp(xdir / "xi.csv"));
  CHECK(t.rows.size() == 9);
  CHECK(t.header[0] == "p");
  CHECK(fs::exists(xdir / "manifest.json"));
}

TEST_CASE("in-process commands") {
  RunConfig c = make_config({}, {{"mode", "basis"}, {"manifold", "CP2"}, {"p", "1..2"}});
  const auto r = run_command(c);
  REQUIRE(!r.files.empty());
  CHECK(parse_csv(r.files.front().content).rows.size() == 10 + 28);
  c.mode = "catalog";
  CHECK(run_command(c).files.front().content.find("dP8") != std::string::npos);
}
