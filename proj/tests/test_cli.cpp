#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/config.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = SENTINEL_CLI_PATH;

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("sentinel_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  static int& counter() {
    static int n = 0;
    return n;
  }
  fs::path file(const std::string& name) const { return dir / name; }
};

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = kCli + " " + args + " >" + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

long count_lines(const std::string& bytes) {
  long n = 0;
  for (char c : bytes) n += c == '\n';
  return n;
}

const char* kGenerateConfig =
    "[task]\n"
    "values_per_report = 12\n"
    "legit_mu = 16\n"
    "legit_sigma = 2\n"
    "[population]\n"
    "users = 250\n"
    "ticks = 1\n"
    "[adversary]\n"
    "fraction = 0.4\n"
    "strategy = \"static1\"\n"
    "mu = 22\n"
    "sigma = 2\n";

}  // namespace

TEST_CASE("unknown experiment ids exit with code 2") {
  Workspace ws;
  CHECK(run_cli("experiment fig9 --out " + ws.file("out").string(), ws.file("log")) == 2);
  std::string log = file_bytes(ws.file("log"));
  CHECK(log.find("fig9") != std::string::npos);
}

TEST_CASE("generate without a config exits with code 2") {
  Workspace ws;
  CHECK(run_cli("generate --out " + ws.file("out").string(), ws.file("log")) == 2);
}

TEST_CASE("a missing config file exits with code 2") {
  Workspace ws;
  CHECK(run_cli("run --config " + ws.file("nope.toml").string(), ws.file("log")) == 2);
}

TEST_CASE("missing required keys are named in the error") {
  Workspace ws;
  write_file(ws.file("cfg.toml"), "[task]\nlegit_sigma = 2\n");
  CHECK(run_cli("generate --config " + ws.file("cfg.toml").string() + " --out " +
                    ws.file("out").string(),
                ws.file("log")) == 2);
  CHECK(file_bytes(ws.file("log")).find("task.legit_mu") != std::string::npos);
}

TEST_CASE("generate writes the dataset and a hash-stamped manifest") {
  Workspace ws;
  write_file(ws.file("cfg.toml"), kGenerateConfig);
  REQUIRE(run_cli("generate --config " + ws.file("cfg.toml").string() + " --out " +
                      ws.file("out").string() + " --seed 42",
                  ws.file("log")) == 0);

  std::string csv = file_bytes(ws.file("out") / "dataset.csv");
  CHECK(count_lines(csv) == 251);  // header + 250 users over 1 tick
  long malicious = 0;
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "reporter_id,tick,unit_id,x,y,v1,v2,v3,v4,v5,v6,v7,v8,v9,v10,v11,v12,label");
  while (std::getline(ss, line))
    malicious += line.size() > 3 && line.compare(line.size() - 3, 3, ",-1") == 0;
  CHECK(malicious == 100);

  auto manifest = nlohmann::json::parse(file_bytes(ws.file("out") / "manifest.json"));
  CHECK(manifest["artifact_version"] == "1.0.0");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["config_hash"] == sentinel::fnv1a_hex(file_bytes(ws.file("cfg.toml"))));
}

TEST_CASE("generate is deterministic for a fixed config and seed") {
  Workspace ws;
  write_file(ws.file("cfg.toml"), kGenerateConfig);
  const std::string base = "generate --config " + ws.file("cfg.toml").string() + " --seed 7 --out ";
  REQUIRE(run_cli(base + ws.file("a").string(), ws.file("log")) == 0);
  REQUIRE(run_cli(base + ws.file("b").string(), ws.file("log")) == 0);
  std::string a = file_bytes(ws.file("a") / "dataset.csv");
  CHECK(!a.empty());
  CHECK(a == file_bytes(ws.file("b") / "dataset.csv"));
}

TEST_CASE("an adversary-free run raises no alarms") {
  Workspace ws;
  write_file(ws.file("cfg.toml"),
             "[task]\n"
             "values_per_report = 12\n"
             "legit_mu = 16\n"
             "legit_sigma = 2\n"
             "[population]\n"
             "users = 150\n"
             "ticks = 4\n"
             "[pipeline]\n"
             "theta = 1.5\n");
  REQUIRE(run_cli("run --config " + ws.file("cfg.toml").string() + " --out " +
                      ws.file("out").string() + " --seed 42",
                  ws.file("log")) == 0);

  auto metrics = nlohmann::json::parse(file_bytes(ws.file("out") / "metrics.json"));
  CHECK(metrics["retrains"] == 0);
  CHECK(metrics["reports_streamed"] == 450);
  REQUIRE(metrics.contains("confusion"));
  // No negatives in the truth, so fpr is undefined and must be absent.
  CHECK_FALSE(metrics["confusion"].contains("fpr"));
  CHECK(metrics["confusion"]["fp"] == 0);
  double tpr = metrics["confusion"]["tpr"].get<double>();
  CHECK(tpr > 0.9);

  std::string events = file_bytes(ws.file("out") / "events.ndjson");
  CHECK(count_lines(events) == 450);
  auto first = nlohmann::json::parse(events.substr(0, events.find('\n')));
  CHECK(first.contains("predicted_label"));
  CHECK(first.contains("drift_stat"));
}

TEST_CASE("run results are reproducible for a fixed seed") {
  Workspace ws;
  write_file(ws.file("cfg.toml"),
             "[task]\n"
             "values_per_report = 12\n"
             "legit_mu = 16\n"
             "legit_sigma = 2\n"
             "[population]\n"
             "users = 100\n"
             "ticks = 3\n"
             "[adversary]\n"
             "fraction = 0.4\n"
             "strategy = \"static1\"\n"
             "mu = 22\n");
  const std::string base = "run --config " + ws.file("cfg.toml").string() + " --seed 5 --out ";
  REQUIRE(run_cli(base + ws.file("a").string(), ws.file("log")) == 0);
  REQUIRE(run_cli(base + ws.file("b").string(), ws.file("log")) == 0);
  CHECK(file_bytes(ws.file("a") / "events.ndjson") == file_bytes(ws.file("b") / "events.ndjson"));
  CHECK(file_bytes(ws.file("a") / "metrics.json") == file_bytes(ws.file("b") / "metrics.json"));
}

TEST_CASE("experiment sweeps write the CSV and summary") {
  Workspace ws;
  write_file(ws.file("cfg.toml"),
             "[experiment]\n"
             "repetitions = 2\n"
             "mu_grid = [16, 22]\n"
             "fractions = [0.4]\n");
  REQUIRE(run_cli("experiment fig2a --config " + ws.file("cfg.toml").string() + " --out " +
                      ws.file("out").string() + " --seed 42",
                  ws.file("log")) == 0);

  std::string csv = file_bytes(ws.file("out") / "fig2a.csv");
  CHECK(count_lines(csv) == 1 + 2 * 2);  // header + grid x repetitions
  CHECK(csv.rfind("experiment,fraction,mu_a,repetition,seed,metric,value\n", 0) == 0);

  auto summary = nlohmann::json::parse(file_bytes(ws.file("out") / "fig2a_summary.json"));
  CHECK(summary["experiment"] == "fig2a");
  CHECK(summary["summary"].is_array());
  CHECK(summary["summary"].size() == 2);

  auto manifest = nlohmann::json::parse(file_bytes(ws.file("out") / "manifest.json"));
  CHECK(manifest["experiment"] == "fig2a");
}
