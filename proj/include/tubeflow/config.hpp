#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubeflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment configuration parsed from the `section.key = value` text format
// (one pair per line, `#` starts a comment, unknown keys are hard errors).
struct ExperimentConfig {
  // geometry
  std::string geometry = "flat";  // flat | circle | ellipse
  double radius = 1.0;            // circle
  double a = 3.0, b = 2.0;        // ellipse semi-axes
  double length = 6.283185307179586;  // flat-cylinder circumference

  // grid
  int ns = 256;
  int nv = 64;

  // sweep
  std::vector<double> eps_list = {0.2, 0.1, 0.05};
  std::vector<double> t_list = {0.1, 0.5, 1.0};

  // sampler
  double T = 1.0;
  double h = 1e-3;
  int n = 10000;
  std::uint64_t seed = 12345;

  // output
  std::string out_dir = "out";
};

// Parse and validate; throws ConfigError with a line number or key path.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

}  // namespace tubeflow
