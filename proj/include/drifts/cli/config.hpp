#pragma once

#include <map>
#include <string>
#include <vector>

#include "drifts/synthgen.hpp"

namespace drifts::cli {

/// Flat "section.key" -> value view of a config file.
using ConfigMap = std::map<std::string, std::string>;

struct InputConfig {
  std::string image_suffix = "_T2w";
  std::string label_suffix = "_dseg";
  LabelScheme label_scheme = LabelScheme::Feta7;  // DrawEm9 inputs are remapped
  bool preprocess = false;
  double target_spacing = 0.5;  // mm
  int target_size = 256;
};

struct RunConfig {
  GenerationConfig generation;
  InputConfig input;
  int count = 1;
  int workers = 1;
  bool continue_on_error = false;
  std::vector<double> alphas{0.0, 0.2, 0.5, 0.8, 1.0};
  int bench_samples = 10;

  void validate() const;
};

/// INI text (sections + key = value, ';' or '#' comments).
ConfigMap parse_ini(const std::string& text);
ConfigMap parse_ini_file(const std::string& path);

/// Applies every entry; unknown keys and malformed values raise ConfigError.
void apply_config(RunConfig& cfg, const ConfigMap& values);

/// Every setting, defaults included, in the form accepted by apply_config.
ConfigMap dump_config(const RunConfig& cfg);

std::string to_ini(const ConfigMap& values);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace drifts::cli
