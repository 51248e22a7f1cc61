#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vlab {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string op;  // how value is compared with tolerance: "<=", ">=", "=="
};

// Build an assertion from a comparison; NaN values always fail.
Assertion assert_le(std::string name, double value, double tolerance);
Assertion assert_ge(std::string name, double value, double tolerance);

struct Manifest {
  std::string experiment;
  std::map<std::string, std::string> config_echo;
  std::vector<std::string> files;  // relative to the output directory, in write order
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;

  bool all_pass() const;
};

// Deterministic JSON text (sorted keys, two-space indent). Hashes every listed
// file under `dir`.
std::string manifest_json(const Manifest& m, const std::filesystem::path& dir);

// Writes bytes verbatim and records the file name in the manifest.
void write_text_artifact(Manifest& m, const std::filesystem::path& dir, const std::string& name,
                         const std::string& text);

}  // namespace vlab
