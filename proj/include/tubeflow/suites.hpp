#pragma once

#include <cstdint>
#include <string>

#include "tubeflow/config.hpp"

namespace tubeflow {

// Runs one verification suite (or "all") and writes its artifacts under
// cfg.out_dir.  Returns the process exit code contract:
//   0 = all checks passed, 1 = at least one check failed.
// Configuration errors (ConfigError) and numerical-infrastructure failures
// (other exceptions) are thrown to the caller, which maps them to 2 and 3.
int run_suite(const ExperimentConfig& cfg, const std::string& suite,
              int threads);

bool is_known_suite(const std::string& suite);

}  // namespace tubeflow
