#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tubeflow/report.hpp"
#include "tubeflow/suites.hpp"

using namespace tubeflow;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyConfig =
    "# tiny smoke configuration\n"
    "geometry.kind = flat\n"
    "geometry.length = 6.283185307179586\n"
    "grid.ns = 48\n"
    "grid.nv = 12\n"
    "sweep.eps_list = 0.4, 0.2\n"
    "sweep.t_list = 0.1, 0.4\n"
    "sampler.T = 0.4\n"
    "sampler.h = 0.002\n"
    "sampler.n = 800\n"
    "sampler.seed = 7\n";

}  // namespace

TEST_CASE("config parsing: defaults, comments, lists") {
  const ExperimentConfig def = parse_config("");
  CHECK(def.geometry == "flat");
  CHECK(def.ns == 256);
  CHECK(def.eps_list.size() == 3);

  const ExperimentConfig cfg = parse_config(kTinyConfig);
  CHECK(cfg.ns == 48);
  CHECK(cfg.nv == 12);
  CHECK(cfg.eps_list == std::vector<double>{0.4, 0.2});
  CHECK(cfg.t_list == std::vector<double>{0.1, 0.4});
  CHECK(cfg.seed == 7);
}

TEST_CASE("config parsing: hard errors carry the offending location") {
  CHECK_THROWS_AS(parse_config("grid.nx = 3\n"), ConfigError);
  try {
    parse_config("grid.ns = 64\nnot a key value line\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  // eps_list must decrease strictly; t_list must increase strictly.
  CHECK_THROWS_AS(parse_config("sweep.eps_list = 0.1, 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("sweep.t_list = 0.5, 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid.ns = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("geometry.kind = moebius\n"), ConfigError);
}

TEST_CASE("numeric formatting and fingerprint hashing are stable") {
  CHECK(format_num(0.25) == "0.25");
  CHECK(format_num(1e-9) == "1e-09");
  CHECK(format_num(3.0) == "3");
  // FNV-1a 64-bit known vectors.
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("suite registry") {
  for (const char* s : {"spectrum", "semigroup", "kernel-bound",
                        "inequalities", "sample", "modulus", "all"})
    CHECK(is_known_suite(s));
  CHECK(!is_known_suite("bogus"));
}

TEST_CASE("spectrum suite runs, writes artifacts, and is deterministic") {
  ExperimentConfig cfg = parse_config(kTinyConfig);
  const fs::path base = fs::temp_directory_path() / "tf_cli_test";
  fs::remove_all(base);
  cfg.out_dir = (base / "run1").string();
  CHECK(run_suite(cfg, "spectrum", 1) == 0);
  CHECK(fs::exists(base / "run1" / "spectrum.csv"));
  CHECK(fs::exists(base / "run1" / "summary.json"));
  cfg.out_dir = (base / "run2").string();
  CHECK(run_suite(cfg, "spectrum", 1) == 0);
  for (const char* f : {"spectrum.csv", "summary.json"})
    CHECK(read_file(base / "run1" / f) == read_file(base / "run2" / f));
  fs::remove_all(base);
}
