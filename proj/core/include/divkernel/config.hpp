#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divkernel/errors.hpp"
#include "divkernel/estimation.hpp"
#include "divkernel/experiments.hpp"
#include "divkernel/simulation.hpp"

namespace divkernel::config {

/// Malformed or inconsistent configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// `key = value` lines; `#` starts a comment. Unknown or repeated keys are errors.
/// Lists are separated by commas and/or whitespace.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string source = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  /// Override or add a value; the key must be known.
  void set(std::string_view key, std::string value);

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;
  std::vector<std::string> get_words(std::string_view key) const;

  const std::string& source() const { return source_; }
  /// Directory relative file paths in the config resolve against.
  const std::filesystem::path& base_dir() const { return base_dir_; }

  static const std::vector<std::string_view>& known_keys();

 private:
  const std::string* find(std::string_view key) const;
  [[noreturn]] void fail(std::string_view key, const std::string& message) const;

  std::map<std::string, std::string, std::less<>> values_;
  std::string source_;
  std::filesystem::path base_dir_;
};

/// "beta A", "mixture W A1 B1 A2 B2" or "tabulated PATH" (two columns x,h).
DivisionKernelModel parse_truth(std::string_view text, const std::filesystem::path& base_dir);

std::vector<estimation::Method> parse_methods(std::string_view text);

EvaluationGrid grid_from(const ConfigFile& cfg);
sim::SimConfig sim_config_from(const ConfigFile& cfg);
experiments::ExperimentConfig experiment_config_from(const ConfigFile& cfg);
experiments::MeanAgeConfig mean_age_config_from(const ConfigFile& cfg);
/// Defaults to -0.9, -0.85, ..., 0.5.
std::vector<double> epsilons_from(const ConfigFile& cfg);

struct EstimateConfig {
  std::filesystem::path sample;
  estimation::Method method = estimation::Method::GL;
  double bandwidth = estimation::kNaN;  // Fixed only
  double epsilon = -0.68;
  double delta = 0.05;
  std::uint32_t cap = 128;
  std::uint32_t dmax_floor = 10;
  EvaluationGrid grid{};
  std::optional<DivisionKernelModel> truth;  // required by Oracle
};
EstimateConfig estimate_config_from(const ConfigFile& cfg);

/// Numbers from a text file: one per line, or the `gamma` column of a CSV with a header.
std::vector<double> read_sample(const std::filesystem::path& path);

}  // namespace divkernel::config
