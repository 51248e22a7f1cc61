#include "vlab/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace vlab {

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::vector<std::uint8_t>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".hdr");
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string raster_header(const GridSpec& g, const RasterMeta& meta, const std::string& format) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "format = " << format << '\n';
  os << "nx = " << g.nx() << '\n';
  os << "ny = " << g.ny() << '\n';
  os << "domain = " << g.domain().x0 << ' ' << g.domain().x1 << ' ' << g.domain().y0 << ' '
     << g.domain().y1 << '\n';
  os << "spacing = " << g.spacing() << '\n';
  os << "n_sites = " << meta.n_sites << '\n';
  os << "topology = " << (meta.topology == Topology::torus ? "torus" : "plane") << '\n';
  if (meta.topology == Topology::torus) os << "period = " << meta.period << '\n';
  return os.str();
}

void write_label_pgm(const LabelGrid& g, const RasterMeta& meta, const std::filesystem::path& path) {
  const int nx = g.spec.nx();
  const int ny = g.spec.ny();
  std::vector<std::uint8_t> body;
  body.reserve(g.spec.size());
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const int l = g.at(i, j);
      if (l == kUnassigned) {
        body.push_back(kPgmUnassigned);
      } else if (l < 0 || l >= kPgmUnassigned) {
        throw std::invalid_argument("label " + std::to_string(l) + " does not fit an 8-bit PGM");
      } else {
        body.push_back(static_cast<std::uint8_t>(l));
      }
    }
  }
  std::ostringstream head;
  head << "P5\n" << nx << ' ' << ny << "\n255\n";
  write_bytes(path, head.str(), body);
  write_text(sidecar(path), raster_header(g.spec, meta, "pgm-labels") +
                                "row_order = top_is_max_y\nunassigned = 255\n");
}

LabelGrid read_label_pgm(const std::filesystem::path& path, const GridSpec& spec) {
  const auto bytes = read_all(path);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream is(text);
  std::string magic;
  int nx = 0, ny = 0, maxval = 0;
  is >> magic >> nx >> ny >> maxval;
  if (magic != "P5" || maxval != 255) throw std::runtime_error("not an 8-bit P5 file: " + path.string());
  if (nx != spec.nx() || ny != spec.ny()) throw std::runtime_error("PGM size does not match grid");
  is.get();
  const auto offset = static_cast<std::size_t>(is.tellg());
  if (bytes.size() < offset + spec.size()) throw std::runtime_error("truncated PGM: " + path.string());
  LabelGrid g(spec);
  std::size_t p = offset;
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const std::uint8_t v = bytes[p++];
      g.labels[spec.index(i, j)] = v == kPgmUnassigned ? kUnassigned : static_cast<int>(v);
    }
  }
  return g;
}

void write_scalar_raw(const ScalarField& f, const RasterMeta& meta, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "raw writer assumes little endian");
  std::vector<std::uint8_t> body(f.values.size() * sizeof(float));
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    const float v = static_cast<float>(f.values[k]);
    std::memcpy(body.data() + k * sizeof(float), &v, sizeof(float));
  }
  write_bytes(path, {}, body);
  write_text(sidecar(path), raster_header(f.spec, meta, "raw-float32-le") + "row_order = j0_first\n");
}

ScalarField read_scalar_raw(const std::filesystem::path& path, const GridSpec& spec) {
  const auto bytes = read_all(path);
  if (bytes.size() != spec.size() * sizeof(float)) throw std::runtime_error("raw size mismatch");
  ScalarField f(spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    float v;
    std::memcpy(&v, bytes.data() + k * sizeof(float), sizeof(float));
    f.values[k] = v;
  }
  return f;
}

const std::vector<Rgb>& default_palette() {
  static const std::vector<Rgb> palette = {
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
      {145, 30, 180},  {70, 240, 240},  {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
      {0, 128, 128},   {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
      {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},   {128, 128, 128},
  };
  return palette;
}

std::vector<std::uint8_t> encode_label_ppm(const LabelGrid& g, const std::vector<Rgb>& palette) {
  if (palette.empty()) throw std::invalid_argument("palette is empty");
  const int nx = g.spec.nx();
  const int ny = g.spec.ny();
  std::ostringstream head;
  head << "P6\n" << nx << ' ' << ny << "\n255\n";
  const std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(h.size() + 3 * g.spec.size());
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const int l = g.at(i, j);
      const Rgb c = l < 0 ? Rgb{0, 0, 0} : palette[static_cast<std::size_t>(l) % palette.size()];
      out.insert(out.end(), c.begin(), c.end());
    }
  }
  return out;
}

void write_label_ppm(const LabelGrid& g, const std::filesystem::path& path,
                     const std::vector<Rgb>& palette) {
  write_bytes(path, {}, encode_label_ppm(g, palette));
}

}  // namespace vlab
