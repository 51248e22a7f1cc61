#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlab/artifacts.hpp"

namespace vlab {

// Environment variable naming the default output root; runs go to
// <root>/<experiment> unless an explicit directory is given.
inline constexpr const char* kOutDirEnv = "VLAB_OUT_DIR";

// A rejected configuration, carrying the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ConfigInputs {
  std::optional<std::filesystem::path> file;
  std::vector<std::string> overrides;  // "key=value", applied in order after the file
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<std::filesystem::path> out;
};

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> values;  // every key of the experiment, defaults filled in
  std::filesystem::path out_dir;

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
  int grid() const { return static_cast<int>(integer("grid")); }
};

const std::vector<std::string>& experiment_names();

// Keys accepted by an experiment, with their default values ("" = unset).
std::map<std::string, std::string> config_defaults(const std::string& experiment);

// `key = value` lines; '#' starts a comment. Throws ConfigError on malformed
// lines or repeated keys.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// File values, then overrides, then the dedicated flags. Unknown keys,
// missing required keys and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const std::string& experiment, const ConfigInputs& in);

struct RunOutcome {
  Manifest manifest;
  int exit_code = 0;  // 0 when every assertion passed, 2 otherwise
};

// Runs one experiment, writing artifacts and manifest.json into cfg.out_dir.
// Module errors propagate as exceptions.
RunOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace vlab
