#pragma once

#include "dnr/volume/grid_volume.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace dnr::io {

namespace fs = std::filesystem;

inline void write_f32_le(std::ostream& os, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  os.write(reinterpret_cast<const char*>(&bits), 4);
}

inline float read_f32_le(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

inline void write_f32_array(const fs::path& path, std::span<const float> data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (float f : data) write_f32_le(os, f);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<float> read_f32_array(const fs::path& path, std::size_t expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> raw(expected * 4);
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw FormatError(path.string() + ": expected " + std::to_string(raw.size()) + " bytes");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
  std::vector<float> out(expected);
  for (std::size_t i = 0; i < expected; ++i) out[i] = read_f32_le(raw.data() + 4 * i);
  return out;
}

inline nlohmann::json mesh_to_json(const volume::Mesh& mesh) {
  nlohmann::json j;
  if (const auto* u = std::get_if<volume::UniformMesh>(&mesh)) {
    j["type"] = "uniform";
    j["origin"] = {u->origin[0], u->origin[1], u->origin[2]};
    j["spacing"] = {u->spacing[0], u->spacing[1], u->spacing[2]};
  } else {
    const auto& r = std::get<volume::RectilinearMesh>(mesh);
    j["type"] = "rectilinear";
    j["x"] = r.coords[0];
    j["y"] = r.coords[1];
    j["z"] = r.coords[2];
  }
  return j;
}

inline volume::Mesh mesh_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform") {
    volume::UniformMesh u;
    for (int a = 0; a < 3; ++a) {
      u.origin[a] = j.at("origin").at(a).get<double>();
      u.spacing[a] = j.at("spacing").at(a).get<double>();
    }
    return u;
  }
  if (type == "rectilinear") {
    volume::RectilinearMesh r;
    r.coords[0] = j.at("x").get<std::vector<double>>();
    r.coords[1] = j.at("y").get<std::vector<double>>();
    r.coords[2] = j.at("z").get<std::vector<double>>();
    return r;
  }
  throw FormatError("unknown mesh type '" + type + "'");
}

/// Manifest path for a volume stored at `base` (base.json + base.raw).
inline fs::path manifest_path(const fs::path& base) {
  return base.extension() == ".json" ? base : fs::path(base.string() + ".json");
}

/// Writes `base.json` (manifest) and `base.raw` (little-endian float32, x-fastest, channels interleaved).
inline void write_volume(const fs::path& base_in, const volume::GridVolume& vol) {
  fs::path base = base_in;
  if (base.extension() == ".json") base.replace_extension();
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  const fs::path raw = fs::path(base.string() + ".raw");
  std::vector<float> data(vol.values().size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(vol.values()[i]);
  write_f32_array(raw, data);

  nlohmann::json m;
  m["format"] = "dnr-volume";
  m["version"] = 1;
  m["dims"] = vol.dims();
  m["channels"] = vol.channels();
  m["mesh"] = mesh_to_json(vol.mesh());
  m["layout"] = "x-fastest";
  m["dtype"] = "float32";
  m["endianness"] = "little";
  m["data"] = raw.filename().string();
  std::ofstream os(manifest_path(base));
  if (!os) throw std::runtime_error("cannot write manifest for " + base.string());
  os << m.dump(2) << '\n';
}

inline volume::GridVolume read_volume(const fs::path& path) {
  const fs::path mpath = manifest_path(path);
  std::ifstream is(mpath);
  if (!is) throw std::runtime_error("cannot open " + mpath.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  if (m.value("layout", "x-fastest") != "x-fastest") throw FormatError("unsupported layout");
  if (m.value("dtype", "float32") != "float32") throw FormatError("unsupported dtype");
  const auto dims = m.at("dims").get<Index3>();
  const int channels = m.value("channels", 1);
  const auto raw = mpath.parent_path() / m.at("data").get<std::string>();
  const auto data = read_f32_array(raw, product(dims) * channels);
  std::vector<double> values(data.begin(), data.end());
  return volume::GridVolume(dims, mesh_from_json(m.at("mesh")), channels, std::move(values));
}

}  // namespace dnr::io
