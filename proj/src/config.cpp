#include "tubeflow/config.hpp"

#include <fstream>
#include <sstream>

namespace tubeflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty element in list for " + key);
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("invalid number '" + item + "' for " + key);
    }
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid number '" + v + "' for " + key);
  }
}

int parse_int(const std::string& v, const std::string& key) {
  const double x = parse_num(v, key);
  const int i = static_cast<int>(x);
  if (i != x) throw ConfigError("expected integer for " + key);
  return i;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

    if (key == "geometry.kind") {
      if (val != "flat" && val != "circle" && val != "ellipse")
        throw ConfigError("geometry.kind must be flat|circle|ellipse");
      cfg.geometry = val;
    } else if (key == "geometry.radius") {
      cfg.radius = parse_num(val, key);
    } else if (key == "geometry.a") {
      cfg.a = parse_num(val, key);
    } else if (key == "geometry.b") {
      cfg.b = parse_num(val, key);
    } else if (key == "geometry.length") {
      cfg.length = parse_num(val, key);
    } else if (key == "grid.ns") {
      cfg.ns = parse_int(val, key);
    } else if (key == "grid.nv") {
      cfg.nv = parse_int(val, key);
    } else if (key == "sweep.eps_list") {
      cfg.eps_list = parse_list(val, key);
    } else if (key == "sweep.t_list") {
      cfg.t_list = parse_list(val, key);
    } else if (key == "sampler.T") {
      cfg.T = parse_num(val, key);
    } else if (key == "sampler.h") {
      cfg.h = parse_num(val, key);
    } else if (key == "sampler.n") {
      cfg.n = parse_int(val, key);
    } else if (key == "sampler.seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_num(val, key));
    } else if (key == "output.dir") {
      cfg.out_dir = val;
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
  }
  // Validation.
  if (cfg.radius <= 0.0) throw ConfigError("geometry.radius must be positive");
  if (cfg.geometry == "ellipse" && !(cfg.a >= cfg.b && cfg.b > 0.0))
    throw ConfigError("geometry: need a >= b > 0");
  if (cfg.length <= 0.0) throw ConfigError("geometry.length must be positive");
  if (cfg.ns < 16 || cfg.nv < 8) throw ConfigError("grid: ns >= 16, nv >= 8");
  for (size_t i = 1; i < cfg.eps_list.size(); ++i)
    if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
      throw ConfigError("sweep.eps_list must be strictly decreasing");
  for (double e : cfg.eps_list)
    if (!(e > 0.0)) throw ConfigError("sweep.eps_list entries must be positive");
  for (size_t i = 1; i < cfg.t_list.size(); ++i)
    if (!(cfg.t_list[i] > cfg.t_list[i - 1]))
      throw ConfigError("sweep.t_list must be strictly increasing");
  for (double t : cfg.t_list)
    if (!(t > 0.0)) throw ConfigError("sweep.t_list entries must be positive");
  if (!(cfg.T > 0.0 && cfg.h > 0.0 && cfg.n > 0))
    throw ConfigError("sampler: T, h, n must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace tubeflow
