#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "rta/csv.hpp"
#include "rta/scenario.hpp"

// Drives the installed binary as a subprocess; RTA_CLI_PATH is injected by
// the build so the tests always exercise the executable they were built with.

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  ++counter;
  const fs::path base = fs::temp_directory_path();
  const fs::path out_file = base / ("rta_cli_stdout_" + std::to_string(counter));
  const fs::path err_file = base / ("rta_cli_stderr_" + std::to_string(counter));
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string(RTA_CLI_PATH) + " " + args;
  cmd += " > " + out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  fs::remove(out_file);
  fs::remove(err_file);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rta_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), "missing ", p.string());
  return nlohmann::json::parse(in);
}

rta::SimulationLog read_log(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), "missing ", p.string());
  return rta::read_log_csv(in);
}

bool verdict_safe(const std::string& out) {
  // "SAFE" is a substring of "UNSAFE", so anchor to the line start.
  return out.find("\nSAFE") != std::string::npos || out.rfind("SAFE", 0) == 0;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes a log and summary and reports safe") {
  const fs::path dir = fresh_dir("run_safe");
  const auto r = run_cli("run --deputies 2 --duration 100 --seed 11 --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(verdict_safe(r.out));
  CHECK(r.out.find("UNSAFE") == std::string::npos);
  CHECK(r.out.find("filter=explicit-asif") != std::string::npos);

  const auto log = read_log(dir / "rta_log.csv");
  CHECK(log.rows.size() == 200);  // 100 steps, two deputies

  const auto j = read_json(dir / "summary.json");
  CHECK(j["filter"] == "explicit-asif");
  CHECK(j["deputies"] == 2);
  CHECK(j["duration_s"] == 100.0);
  CHECK(j["dt_s"] == 1.0);
  CHECK(j["seed"] == 11);
  CHECK(j["rows"] == 200);
  CHECK(j["safe"] == true);
  CHECK(j["wall_clock_seconds"].get<double>() > 0.0);
  CHECK(j["min_phi"].size() == 7);

  // The JSON summary and the CSV describe the same run.
  const auto s = rta::summarize(log);
  CHECK(j["min_overall"].get<double>() == s.min_overall);
  CHECK(j["interventions"].get<std::int64_t>() == s.interventions);
  CHECK(j["qp_relaxations"].get<std::int64_t>() == s.qp_relaxations);
}

TEST_CASE("disabling the filter lets the primary violate") {
  const fs::path dir = fresh_dir("run_none");
  const auto r =
      run_cli("run --filter none --deputies 2 --duration 100 --seed 11 --out " + dir.string());
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("UNSAFE") != std::string::npos);

  // Logs are still written for unsafe runs.
  const auto j = read_json(dir / "summary.json");
  CHECK(j["filter"] == "none");
  CHECK(j["safe"] == false);
  CHECK(j["min_overall"].get<double>() < 0.0);
  CHECK(fs::exists(dir / "rta_log.csv"));
}

TEST_CASE("single-deputy summaries mark the pairwise margin as undefined") {
  const fs::path dir = fresh_dir("run_solo");
  const auto r = run_cli("run --deputies 1 --duration 20 --seed 3 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto j = read_json(dir / "summary.json");
  CHECK(j["min_phi"]["phi_2"].is_null());  // +inf has no JSON spelling
  CHECK(j["min_phi"]["phi_1"].get<double>() > 0.0);
}

TEST_CASE("bad invocations exit with code 2") {
  CHECK(run_cli("").exit_code == 2);               // subcommand required
  CHECK(run_cli("fly").exit_code == 2);            // unknown subcommand
  CHECK(run_cli("run --bogus 1").exit_code == 2);  // unknown flag
  CHECK(run_cli("run --config /nonexistent.ini").exit_code == 2);
  CHECK(run_cli("bench --repeats 0").exit_code == 2);

  auto r = run_cli("run --filter warp");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("config error") != std::string::npos);
  CHECK(r.err.find("unknown filter kind 'warp'") != std::string::npos);

  r = run_cli("run --dt 3 --duration 10");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("integer multiple") != std::string::npos);

  r = run_cli("run --deputies 0");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("deputies must be >= 1") != std::string::npos);
}

TEST_CASE("config files are validated before running") {
  const fs::path dir = fresh_dir("bad_cfg");
  const fs::path ini = dir / "broken.ini";
  std::ofstream(ini) << "[scenario]\nwarp = 9\n";
  const auto r = run_cli("run --config " + ini.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("config error") != std::string::npos);
  CHECK(r.err.find("warp") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
  auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("run") != std::string::npos);
  CHECK(r.out.find("bench") != std::string::npos);

  r = run_cli("run --help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("--filter") != std::string::npos);
  CHECK(r.out.find("--out") != std::string::npos);
}

TEST_CASE("the output directory honors RTA_OUT_DIR with --out taking precedence") {
  const fs::path env_dir = fresh_dir("env_out");
  auto r = run_cli("run --deputies 1 --duration 20 --seed 3",
                   "RTA_OUT_DIR=" + env_dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(env_dir / "rta_log.csv"));
  CHECK(fs::exists(env_dir / "summary.json"));

  const fs::path flag_dir = fresh_dir("flag_out");
  const fs::path decoy_dir = fresh_dir("decoy_out");
  r = run_cli("run --deputies 1 --duration 20 --seed 3 --out " + flag_dir.string(),
              "RTA_OUT_DIR=" + decoy_dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(flag_dir / "summary.json"));
  CHECK(!fs::exists(decoy_dir / "summary.json"));
}

TEST_CASE("command-line overrides win over the config file") {
  const fs::path dir = fresh_dir("cfg_override");
  const fs::path ini = dir / "small.ini";
  std::ofstream(ini) << "[scenario]\ndeputies = 1\nduration = 20\nseed = 5\n";
  const auto r =
      run_cli("run --config " + ini.string() + " --deputies 2 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto j = read_json(dir / "summary.json");
  CHECK(j["deputies"] == 2);      // flag beats file
  CHECK(j["duration_s"] == 20.0); // file beats default
  CHECK(j["seed"] == 5);
}

TEST_CASE("equal seeds produce byte-identical logs across processes") {
  const fs::path a = fresh_dir("repro_a");
  const fs::path b = fresh_dir("repro_b");
  const std::string args = "run --deputies 2 --duration 60 --seed 11 --out ";
  CHECK(run_cli(args + a.string()).exit_code == 0);
  CHECK(run_cli(args + b.string()).exit_code == 0);
  CHECK(slurp(a / "rta_log.csv") == slurp(b / "rta_log.csv"));

  // Summaries agree except for the wall-clock measurement.
  auto ja = read_json(a / "summary.json");
  auto jb = read_json(b / "summary.json");
  ja.erase("wall_clock_seconds");
  jb.erase("wall_clock_seconds");
  CHECK(ja == jb);
}

TEST_CASE("bench aggregates timing over repeats") {
  const fs::path dir = fresh_dir("bench");
  auto r = run_cli("bench --repeats 2 --deputies 1 --duration 20 --seed 3 --out " +
                   dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("bench:") != std::string::npos);

  const auto j = read_json(dir / "bench_summary.json");
  CHECK(j["repeats"] == 2);
  REQUIRE(j["runs"].size() == 2);
  CHECK(j["runs"][0]["seed"] == 3);  // seeds advance per repeat
  CHECK(j["runs"][1]["seed"] == 4);
  CHECK(j["min_seconds"].get<double>() <= j["mean_seconds"].get<double>());
  CHECK(j["mean_seconds"].get<double>() <= j["max_seconds"].get<double>());

  r = run_cli("bench --repeats 2 --same-seed --deputies 1 --duration 20 --seed 3 --out " +
              dir.string());
  CHECK(r.exit_code == 0);
  const auto js = read_json(dir / "bench_summary.json");
  CHECK(js["runs"][0]["seed"] == 3);
  CHECK(js["runs"][1]["seed"] == 3);
  // Identical seeds, identical trajectories, identical margins.
  CHECK(js["runs"][0]["min_overall"] == js["runs"][1]["min_overall"]);
}

}  // TEST_SUITE
