#include "vlab/artifacts.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

#include "json.hpp"

namespace vlab {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

std::string hex(const unsigned char* p, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned k = 0; k < n; ++k) {
    out.push_back(digits[p[k] >> 4]);
    out.push_back(digits[p[k] & 15]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  return hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

Assertion assert_le(std::string name, double value, double tolerance) {
  return {std::move(name), value <= tolerance, value, tolerance, "<="};
}

Assertion assert_ge(std::string name, double value, double tolerance) {
  return {std::move(name), value >= tolerance, value, tolerance, ">="};
}

bool Manifest::all_pass() const {
  for (const auto& a : assertions) {
    if (!a.pass) return false;
  }
  return true;
}

std::string manifest_json(const Manifest& m, const std::filesystem::path& dir) {
  nlohmann::json j;
  j["experiment"] = m.experiment;
  j["config_echo"] = m.config_echo;
  j["files"] = nlohmann::json::array();
  for (const auto& f : m.files) j["files"].push_back({{"name", f}, {"sha256", sha256_file(dir / f)}});
  j["assertions"] = nlohmann::json::array();
  for (const auto& a : m.assertions) {
    nlohmann::json v = std::isfinite(a.value) ? nlohmann::json(a.value) : nlohmann::json(nullptr);
    j["assertions"].push_back(
        {{"name", a.name}, {"pass", a.pass}, {"value", v}, {"tolerance", a.tolerance}, {"op", a.op}});
  }
  j["notes"] = m.notes;
  return j.dump(2) + "\n";
}

void write_text_artifact(Manifest& m, const std::filesystem::path& dir, const std::string& name,
                         const std::string& text) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + (dir / name).string());
  m.files.push_back(name);
}

}  // namespace vlab
