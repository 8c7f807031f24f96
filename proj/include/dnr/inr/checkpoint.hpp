#pragma once

#include "dnr/inr/model.hpp"
#include "dnr/volume/io.hpp"
#include "dnr/volume/normalize.hpp"

#include <json.hpp>

#include <optional>
#include <sstream>

namespace dnr::inr {

// Layout:
//   8 bytes  magic "DNRINR\0\0"
//   u32 LE   format version
//   u32 LE   header length H
//   H bytes  JSON header (configs, value range slot, partition slot)
//   u64 LE   parameter count P
//   P * f32  LE parameters: encoding tables by level, then per layer weight (col-major out x in), bias
inline constexpr char kCheckpointMagic[8] = {'D', 'N', 'R', 'I', 'N', 'R', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::optional<volume::ValueRange> value_range;
  nlohmann::json partition;  // free-form partition metadata, null when absent
  nlohmann::json extra;
};

inline nlohmann::json to_json(const EncodingConfig& c) {
  return {{"levels", c.levels},
          {"features_per_level", c.features_per_level},
          {"table_size", c.table_size},
          {"base_resolution", c.base_resolution},
          {"per_level_scale", c.per_level_scale}};
}

inline EncodingConfig encoding_from_json(const nlohmann::json& j) {
  EncodingConfig c;
  c.levels = j.at("levels");
  c.features_per_level = j.at("features_per_level");
  c.table_size = j.at("table_size");
  c.base_resolution = j.at("base_resolution");
  c.per_level_scale = j.at("per_level_scale");
  return c;
}

inline nlohmann::json to_json(const MlpConfig& c) {
  return {{"hidden_layers", c.hidden_layers}, {"neurons", c.neurons}, {"output_dim", c.output_dim},
          {"activation", "relu"}, {"output_activation", "none"}};
}

inline MlpConfig mlp_from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.hidden_layers = j.at("hidden_layers");
  c.neurons = j.at("neurons");
  c.output_dim = j.at("output_dim");
  return c;
}

inline nlohmann::json to_json(const volume::ValueRange& r) { return {{"vmin", r.vmin}, {"vmax", r.vmax}}; }

inline volume::ValueRange range_from_json(const nlohmann::json& j) {
  return {j.at("vmin").get<std::vector<double>>(), j.at("vmax").get<std::vector<double>>()};
}

namespace detail {
inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint64_t get_le(const std::string& s, std::size_t pos, int bytes) {
  if (pos + bytes > s.size()) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  return v;
}
}  // namespace detail

inline std::string serialize_checkpoint(const InrModel<float>& model, const CheckpointMeta& meta = {}) {
  nlohmann::json h;
  h["encoding"] = to_json(model.encoding_config());
  h["mlp"] = to_json(model.mlp_config());
  h["hash"] = {{"primes", {1u, 2654435761u, 805459861u}}, {"dense_when", "(N+1)^3 <= T"}};
  h["init"] = {{"tables", "uniform(-1e-4,1e-4)"}, {"weights", "uniform(+-sqrt(6/fan_in))"}, {"biases", "zero"}};
  h["param_order"] = "tables by level; per layer weight col-major (out x in) then bias";
  h["value_range"] = meta.value_range ? to_json(*meta.value_range) : nlohmann::json();
  h["partition"] = meta.partition;
  h["extra"] = meta.extra;
  const std::string header = h.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  detail::put_u64(out, model.param_count());
  for (float f : model.params()) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline std::pair<InrModel<float>, CheckpointMeta> deserialize_checkpoint(const std::string& s) {
  if (s.size() < 16 || s.compare(0, 8, std::string(kCheckpointMagic, 8)) != 0) {
    throw FormatError("not a model checkpoint (bad magic)");
  }
  const auto version = detail::get_le(s, 8, 4);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = detail::get_le(s, 12, 4);
  if (16 + hlen > s.size()) throw FormatError("checkpoint header truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(s.substr(16, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  InrModel<float> model(encoding_from_json(h.at("encoding")), mlp_from_json(h.at("mlp")));
  std::size_t pos = 16 + hlen;
  const auto count = detail::get_le(s, pos, 8);
  pos += 8;
  if (count != model.param_count()) throw FormatError("checkpoint parameter count does not match configs");
  if (pos + 4 * count != s.size()) throw FormatError("checkpoint parameter blob has wrong length");
  auto p = model.params();
  for (std::size_t i = 0; i < count; ++i) {
    p[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(s, pos + 4 * i, 4)));
  }
  CheckpointMeta meta;
  if (!h.at("value_range").is_null()) meta.value_range = range_from_json(h["value_range"]);
  meta.partition = h.value("partition", nlohmann::json());
  meta.extra = h.value("extra", nlohmann::json());
  return {std::move(model), std::move(meta)};
}

inline void save_checkpoint(const std::filesystem::path& path, const InrModel<float>& model,
                            const CheckpointMeta& meta = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_checkpoint(model, meta);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::pair<InrModel<float>, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace dnr::inr
