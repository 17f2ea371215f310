#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ehn/model.hpp"

namespace ehn {

/// Parse failure. `line` is 1-based, 0 when the problem is not tied to a
/// single line (missing keys, cross-field range checks).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line, std::string key)
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}
  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

struct ExperimentConfig {
  ModelParams model;
  std::uint64_t slots = 1'000'000;
  std::uint64_t warmup_slots = 10'000;
  std::uint64_t seed = 1;
  std::vector<double> sweep_weights;  // HP weights; LP weight is 1 - w
  std::vector<double> sweep_rates;    // per-class Bernoulli arrival rates
  std::string out_dir = "out";
  int slice_energy = 5;  // battery level of the exported policy slice
};

std::vector<double> default_sweep_weights();
std::vector<double> default_sweep_rates();

/// Flat `key = value` lines; `#` starts a comment; lists are comma
/// separated. Harvest entries are `units:prob`. Loss limits accept
/// `unbounded`.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config, in a fixed key order.
std::string format_config(const ExperimentConfig& config);

}  // namespace ehn
