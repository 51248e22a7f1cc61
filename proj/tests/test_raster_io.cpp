#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "vlab/raster_io.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vlab_raster_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("label PGM round trip") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int nx = 2 + static_cast<int>(rng() % 40);
    const int ny = 2 + static_cast<int>(rng() % 40);
    const GridSpec g(nx, ny, Rect{0, static_cast<double>(nx), 0, static_cast<double>(ny)});
    LabelGrid lg(g);
    for (int& l : lg.labels) l = static_cast<int>(rng() % 8) - 1;
    const fs::path p = scratch("labels.pgm");
    write_label_pgm(lg, {7, Topology::plane, 0.0}, p);
    CHECK(read_label_pgm(p, g).labels == lg.labels);
    CHECK(fs::exists(p.string() + ".hdr"));
  }
}

TEST_CASE("PGM layout puts the largest y first") {
  const GridSpec g(3, 2, Rect{0, 3, 0, 2});
  LabelGrid lg(g);
  lg.labels = {0, 1, 2, 3, 4, kUnassigned};
  const fs::path p = scratch("layout.pgm");
  write_label_pgm(lg, {5}, p);
  const std::string bytes = slurp(p);
  const std::string head = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == head.size() + 6);
  CHECK(bytes.substr(0, head.size()) == head);
  const std::string body = bytes.substr(head.size());
  CHECK(static_cast<unsigned char>(body[0]) == 3);
  CHECK(static_cast<unsigned char>(body[2]) == kPgmUnassigned);
  CHECK(static_cast<unsigned char>(body[3]) == 0);

  LabelGrid big(g);
  big.labels[0] = 255;
  CHECK_THROWS(write_label_pgm(big, {1}, scratch("big.pgm")));
}

TEST_CASE("scalar raw round trip") {
  const GridSpec g(5, 4, Rect{0, 5, 0, 4});
  ScalarField f(g);
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = 0.25 * static_cast<double>(k) - 1.5;
  const fs::path p = scratch("field.raw");
  write_scalar_raw(f, {1, Topology::torus, 5.0}, p);
  CHECK(fs::file_size(p) == 4 * g.size());
  CHECK(read_scalar_raw(p, g).values == f.values);
  CHECK(slurp(p.string() + ".hdr").find("torus") != std::string::npos);
  CHECK_THROWS(read_scalar_raw(p, GridSpec(4, 4, Rect{0, 4, 0, 4})));
}

TEST_CASE("colour PPM") {
  const GridSpec g(4, 4, Rect{0, 4, 0, 4});
  const LabelGrid zeros(g, 0);
  const auto img = encode_label_ppm(zeros, default_palette());
  const std::string head = "P6\n4 4\n255\n";
  REQUIRE(img.size() == head.size() + 48);
  for (std::size_t k = head.size(); k < img.size(); k += 3) {
    CHECK(img[k] == default_palette()[0][0]);
    CHECK(img[k + 1] == default_palette()[0][1]);
    CHECK(img[k + 2] == default_palette()[0][2]);
  }
  CHECK(encode_label_ppm(zeros, default_palette()) == img);
  const LabelGrid none(g);
  const auto dark = encode_label_ppm(none, default_palette());
  for (std::size_t k = head.size(); k < dark.size(); ++k) CHECK(dark[k] == 0);
}

TEST_CASE("sidecar header") {
  const GridSpec g(4, 2, Rect{0, 2, 0, 1});
  const std::string h = raster_header(g, {3, Topology::plane, 0.0}, "pgm");
  CHECK(h.find("nx = 4") != std::string::npos);
  CHECK(h.find("ny = 2") != std::string::npos);
  CHECK(h.find("n_sites = 3") != std::string::npos);
}
