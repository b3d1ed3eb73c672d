#include "rmloc/serialize.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "rmloc/errors.hpp"

namespace rmloc {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'R', 'M', 'S', '1'};

void write_u32le(std::ostream& os, uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("malformed header: file too short for header length");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

json header_json(const RadioMapSet& set) {
  json txs = json::array();
  for (const Cell& c : set.tx_positions) txs.push_back({c.x, c.y});
  return json{{"width", set.geometry.width},
              {"height", set.geometry.height},
              {"cell_size", set.geometry.cell_size},
              {"tx_positions", txs}};
}

GridGeometry geometry_from_header(const json& h) {
  GridGeometry g;
  g.width = h.at("width").get<int>();
  g.height = h.at("height").get<int>();
  g.cell_size = h.at("cell_size").get<double>();
  return g;
}

std::vector<Cell> tx_positions_from_header(const json& h, const GridGeometry& g) {
  std::vector<Cell> txs;
  for (const json& e : h.at("tx_positions")) {
    if (!e.is_array() || e.size() != 2)
      throw FormatError("malformed header: tx_positions entries must be [x, y]");
    Cell c{e[0].get<int>(), e[1].get<int>()};
    if (!g.contains(c.x, c.y))
      throw FormatError("malformed header: tx position outside grid");
    txs.push_back(c);
  }
  return txs;
}

}  // namespace

void save_radio_map_set(const RadioMapSet& set, const std::filesystem::path& path) {
  set.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  const std::string header = header_json(set).dump();
  f.write(kMagic, 4);
  write_u32le(f, static_cast<uint32_t>(header.size()));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const RadioMap& m : set.maps)
    f.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.values().size()));
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

RadioMapSet load_radio_map_set(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());

  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("malformed header: missing RMS1 magic in " + path.string());

  const uint32_t header_len = read_u32le(f);
  if (header_len > (1u << 20))
    throw FormatError("malformed header: implausible header length " +
                      std::to_string(header_len));
  std::string header_text(header_len, '\0');
  f.read(header_text.data(), header_len);
  if (!f) throw FormatError("malformed header: truncated header in " + path.string());

  json h;
  try {
    h = json::parse(header_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }

  GridGeometry geometry;
  std::vector<Cell> txs;
  try {
    geometry = geometry_from_header(h);
    geometry.validate();
    txs = tx_positions_from_header(h, geometry);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }

  // Distinguish "whole planes missing" from "torn mid-plane".
  const auto payload_start = f.tellg();
  f.seekg(0, std::ios::end);
  const auto payload_bytes = static_cast<uint64_t>(f.tellg() - payload_start);
  f.seekg(payload_start);

  const uint64_t plane_bytes = geometry.size();
  const uint64_t expected = plane_bytes * txs.size();
  if (payload_bytes != expected) {
    if (payload_bytes % plane_bytes == 0)
      throw FormatError("geometry mismatch: header declares " +
                        std::to_string(txs.size()) + " tx but file contains " +
                        std::to_string(payload_bytes / plane_bytes) + " plane(s)");
    throw FormatError("truncated data: expected " + std::to_string(expected) +
                      " plane bytes, found " + std::to_string(payload_bytes));
  }

  RadioMapSet set;
  set.geometry = geometry;
  set.tx_positions = std::move(txs);
  for (std::size_t i = 0; i < set.tx_positions.size(); ++i) {
    std::vector<uint8_t> values(plane_bytes);
    f.read(reinterpret_cast<char*>(values.data()),
           static_cast<std::streamsize>(plane_bytes));
    if (!f) throw FormatError("truncated data: plane " + std::to_string(i));
    set.maps.emplace_back(geometry, std::move(values));
  }
  set.validate();
  return set;
}

void save_pgm(const RadioMap& map, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "P5\n"
    << map.geometry().width << " " << map.geometry().height << "\n255\n";
  f.write(reinterpret_cast<const char*>(map.data()),
          static_cast<std::streamsize>(map.values().size()));
  if (!f) throw IoError("write failed: " + path.string());
}

namespace {

// Reads one whitespace/comment-delimited PGM header token.
std::string pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

RadioMap load_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  if (pgm_token(f) != "P5")
    throw FormatError("malformed header: not a binary PGM: " + path.string());
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(pgm_token(f));
    height = std::stoi(pgm_token(f));
    maxval = std::stoi(pgm_token(f));
  } catch (const std::exception&) {
    throw FormatError("malformed header: bad PGM dimensions in " + path.string());
  }
  if (maxval != 255)
    throw FormatError("malformed header: PGM maxval must be 255 in " + path.string());
  GridGeometry g{width, height, 1.0};
  g.validate();
  std::vector<uint8_t> values(g.size());
  f.read(reinterpret_cast<char*>(values.data()),
         static_cast<std::streamsize>(values.size()));
  if (!f) throw FormatError("truncated data: " + path.string());
  return RadioMap(g, std::move(values));
}

RadioMapSet import_raster_dir(const std::filesystem::path& dir) {
  const auto sidecar = dir / "maps.json";
  std::ifstream sf(sidecar);
  if (!sf) throw IoError("cannot open sidecar: " + sidecar.string());
  json meta;
  try {
    meta = json::parse(sf);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed sidecar: ") + e.what());
  }

  std::vector<std::string> plane_files;
  if (meta.contains("planes")) {
    for (const json& p : meta.at("planes")) plane_files.push_back(p.get<std::string>());
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".pgm")
        plane_files.push_back(entry.path().filename().string());
    std::sort(plane_files.begin(), plane_files.end());
  }

  RadioMapSet set;
  for (const std::string& name : plane_files)
    set.maps.push_back(load_pgm(dir / name));
  if (set.maps.empty()) throw FormatError("raster import: no planes found in " + dir.string());

  set.geometry = set.maps.front().geometry();
  if (meta.contains("cell_size")) set.geometry.cell_size = meta.at("cell_size").get<double>();
  for (std::size_t i = 0; i < set.maps.size(); ++i) {
    RadioMap& m = set.maps[i];
    if (m.geometry().width != set.geometry.width ||
        m.geometry().height != set.geometry.height)
      throw FormatError("geometry mismatch: plane " + plane_files[i] +
                        " differs from plane " + plane_files[0]);
    if (m.geometry().cell_size != set.geometry.cell_size)
      m = RadioMap(set.geometry, std::vector<uint8_t>(m.values()));
  }

  try {
    set.tx_positions = tx_positions_from_header(meta, set.geometry);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed sidecar: ") + e.what());
  }
  if (set.tx_positions.size() != set.maps.size())
    throw FormatError("geometry mismatch: " + std::to_string(set.tx_positions.size()) +
                      " tx positions but " + std::to_string(set.maps.size()) +
                      " raster planes");
  set.validate();
  return set;
}

}  // namespace rmloc
