#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = TUBEGRID_CLI_PATH;
const std::string kBenchConfig =
    TUBEGRID_REPO_DIR "/configs/paper_sec7.json";
const std::string kDesignConfig =
    TUBEGRID_REPO_DIR "/configs/mesh6_design.json";

fs::path work_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      kCli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load_json(const fs::path& p) {
  return nlohmann::json::parse(slurp(p));
}

// Structurally valid explicit gains whose error gain is far below the
// certified requirement, so every certificate-gated path trips.
std::string weak_gain_config() {
  return R"({
    "schema_version": 1,
    "network": {
      "nodes": 3,
      "edges": [[1, 2], [2, 3], [3, 1]],
      "capacitance": 500e-6,
      "line_resistance": 0.1,
      "line_inductance": 0.06,
      "rated_voltage": 110.0,
      "nominal_load": {"p": 500.0, "q": 400.0},
      "disturbance_bounds": {"dp": 500.0, "dq": 400.0},
      "voltage_limit": {"center": 109.5, "radius": 6.0}
    },
    "gains": {
      "mode": "explicit",
      "e_bar": 0.2, "z_tilde_m": 5.0, "delta": 1.0,
      "K": 1.0, "K_d": 100.0, "K_q": 100.0, "M": 500.0,
      "k_Id": 50.0, "k_Iq": 50.0
    }
  })";
}

}  // namespace

TEST_CASE("cli: certify the bundled benchmark") {
  const fs::path dir = work_dir("tubegrid_cli_certify");
  const int rc = run_cli("certify --config " + kBenchConfig +
                             " --out-dir " + (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 0);
  const nlohmann::json certs = load_json(dir / "out" / "certificates.json");
  CHECK(certs.at("all_pass").get<bool>());
  CHECK(slurp(dir / "log.txt").find("PASS") != std::string::npos);
}

TEST_CASE("cli: design writes the sized gains") {
  const fs::path dir = work_dir("tubegrid_cli_design");
  const int rc = run_cli("design --config " + kDesignConfig +
                             " --out-dir " + (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 0);
  const nlohmann::json gains = load_json(dir / "out" / "gains.json");
  CHECK(gains.at("K")[0].get<double>() ==
        doctest::Approx(15.261557445565323).epsilon(1e-9));
  CHECK(gains.at("M")[0].get<double>() ==
        doctest::Approx(gains.at("K_d")[0].get<double>() * 5.0));
  CHECK(fs::exists(dir / "out" / "certificates.json"));
}

TEST_CASE("cli: design rejects an explicit-gain config") {
  const fs::path dir = work_dir("tubegrid_cli_design_explicit");
  const int rc = run_cli("design --config " + kBenchConfig +
                             " --out-dir " + (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 1);
}

TEST_CASE("cli: short simulation emits the full artifact set") {
  const fs::path dir = work_dir("tubegrid_cli_sim");
  const int rc = run_cli("simulate --config " + kBenchConfig +
                             " --t-end 0.01 --out-dir " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "out" / "trajectory.csv"));
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(fs::exists(dir / "out" / "certificates.json"));
  CHECK(fs::is_directory(dir / "out" / "plots"));
  const nlohmann::json report = load_json(dir / "out" / "report.json");
  CHECK_FALSE(report.at("diverged").get<bool>());
  CHECK(report.at("disk_violations").get<int>() == 0);
}

TEST_CASE("cli: zero horizon still writes valid headers") {
  const fs::path dir = work_dir("tubegrid_cli_zero");
  const int rc = run_cli("simulate --config " + kBenchConfig +
                             " --t-end 0 --out-dir " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 0);
  const std::string csv = slurp(dir / "out" / "trajectory.csv");
  CHECK(csv.rfind("t,node,v_d,v_q,v_rms", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
}

TEST_CASE("cli: failed certificates block simulation") {
  const fs::path dir = work_dir("tubegrid_cli_gate");
  {
    std::ofstream out(dir / "weak.json");
    out << weak_gain_config();
  }
  const int rc = run_cli("simulate --config " + (dir / "weak.json").string() +
                             " --t-end 0.001 --out-dir " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 2);
  CHECK(slurp(dir / "log.txt").find("--allow-uncertified") !=
        std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "trajectory.csv"));

  const int forced = run_cli(
      "simulate --config " + (dir / "weak.json").string() +
          " --t-end 0.001 --allow-uncertified --out-dir " +
          (dir / "out").string(),
      dir / "log2.txt");
  CHECK(forced == 0);
  CHECK(fs::exists(dir / "out" / "trajectory.csv"));
}

TEST_CASE("cli: malformed config is a usage error") {
  const fs::path dir = work_dir("tubegrid_cli_badjson");
  {
    std::ofstream out(dir / "broken.json");
    out << "this is not json {";
  }
  const int rc = run_cli("certify --config " +
                             (dir / "broken.json").string() + " --out-dir " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 1);
  CHECK(slurp(dir / "log.txt").find("JSON") != std::string::npos);
}

TEST_CASE("cli: unknown flags and help") {
  const fs::path dir = work_dir("tubegrid_cli_flags");
  CHECK(run_cli("--help", dir / "help.txt") == 0);
  CHECK(slurp(dir / "help.txt").find("simulate") != std::string::npos);
  CHECK(run_cli("simulate --no-such-flag", dir / "bad.txt") == 1);
  CHECK(run_cli("", dir / "none.txt") == 1);  // a subcommand is required
}

TEST_CASE("cli: model comparison artifact") {
  const fs::path dir = work_dir("tubegrid_cli_compare");
  const int rc = run_cli("compare --config " + kBenchConfig +
                             " --t-end 0.02 --out-dir " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 0);
  const nlohmann::json cmp = load_json(dir / "out" / "compare.json");
  CHECK(cmp.contains("transient_max"));
  CHECK(cmp.contains("steady_state_gap"));
  CHECK(cmp.at("times").size() == cmp.at("voltage_gap").size());
  CHECK_FALSE(cmp.at("diverged").get<bool>());
}
