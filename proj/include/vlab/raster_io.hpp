#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

// Extra information written to the sidecar header next to every raster.
struct RasterMeta {
  std::size_t n_sites = 0;
  Topology topology = Topology::plane;
  double period = 0.0;
};

// Pixel value used for UNASSIGNED nodes in label PGMs.
inline constexpr std::uint8_t kPgmUnassigned = 255;

// Binary PGM (P5, maxval 255). The first image row is the grid row of
// largest y. Labels must be < 255. Also writes `<path>.hdr`.
void write_label_pgm(const LabelGrid& g, const RasterMeta& meta, const std::filesystem::path& path);

// Reads a P5 file written by write_label_pgm back into labels on `spec`.
LabelGrid read_label_pgm(const std::filesystem::path& path, const GridSpec& spec);

// Little-endian float32 values in linear node order (row j = 0 first), plus
// `<path>.hdr`.
void write_scalar_raw(const ScalarField& f, const RasterMeta& meta, const std::filesystem::path& path);
ScalarField read_scalar_raw(const std::filesystem::path& path, const GridSpec& spec);

using Rgb = std::array<std::uint8_t, 3>;

// Fixed palette; label k maps to entry k mod size.
const std::vector<Rgb>& default_palette();

// Color PPM (P6). UNASSIGNED renders black. Same row order as the PGM.
std::vector<std::uint8_t> encode_label_ppm(const LabelGrid& g, const std::vector<Rgb>& palette);
void write_label_ppm(const LabelGrid& g, const std::filesystem::path& path,
                     const std::vector<Rgb>& palette = default_palette());

// Sidecar text: `key = value` lines describing a raster.
std::string raster_header(const GridSpec& g, const RasterMeta& meta, const std::string& format);

}  // namespace vlab
