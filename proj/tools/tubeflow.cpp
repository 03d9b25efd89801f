#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "tubeflow/config.hpp"
#include "tubeflow/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tubeflow: tube-constrained diffusion verification suites"};
  std::string suite;
  std::string config_path;
  std::string out_dir;
  unsigned long long seed = 0;
  bool seed_set = false;
  int threads = 0;

  app.add_option("suite", suite,
                 "spectrum | semigroup | kernel-bound | inequalities | "
                 "sample | modulus | all")
      ->required();
  app.add_option("--config", config_path, "configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override sampler.seed");
  app.add_option("--out", out_dir, "override output.dir");
  app.add_option("--threads", threads,
                 "worker threads (default: TUBEFLOW_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }
  seed_set = seed_opt->count() > 0;

  if (threads <= 0) {
    if (const char* env = std::getenv("TUBEFLOW_THREADS"))
      threads = std::atoi(env);
    if (threads <= 0) threads = 1;
  }

  try {
    if (!tubeflow::is_known_suite(suite)) {
      std::cerr << "error: unknown suite '" << suite << "'\n";
      return 2;
    }
    tubeflow::ExperimentConfig cfg = tubeflow::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const int rc = tubeflow::run_suite(cfg, suite, threads);
    std::cout << (rc == 0 ? "PASS" : "FAIL") << " suite=" << suite
              << " out=" << cfg.out_dir << "\n";
    return rc;
  } catch (const tubeflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
