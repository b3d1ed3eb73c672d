#pragma once

#include <filesystem>

#include "rmloc/radiomap.hpp"

namespace rmloc {

// Radio map set container, extension ".rms".
//
//   magic "RMS1"
//   u32 little-endian header length
//   header: UTF-8 JSON object {width, height, cell_size, tx_positions}
//   tx_count planes of width*height raw bytes, row-major, in Tx order
//
// Round-trips are bit-exact and two saves of the same set produce
// byte-identical files.
void save_radio_map_set(const RadioMapSet& set, const std::filesystem::path& path);
RadioMapSet load_radio_map_set(const std::filesystem::path& path);

// 8-bit binary PGM (P5, maxval 255) for exchanging single planes with
// external tools.
void save_pgm(const RadioMap& map, const std::filesystem::path& path);
RadioMap load_pgm(const std::filesystem::path& path);

// Import a directory of per-Tx 8-bit grayscale PGM rasters described by a
// JSON sidecar (default name "maps.json"):
//
//   {"cell_size": 1.0,
//    "tx_positions": [[x, y], ...],
//    "planes": ["tx00.pgm", ...]}      // optional; sorted *.pgm otherwise
//
// Planes are matched to tx_positions in order; all rasters must share one
// geometry.
RadioMapSet import_raster_dir(const std::filesystem::path& dir);

}  // namespace rmloc
