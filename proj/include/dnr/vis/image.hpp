#pragma once

#include "dnr/common.hpp"
#include "dnr/volume/metrics.hpp"

#include <zlib.h>

#include <filesystem>
#include <fstream>

namespace dnr::vis {

/// RGBA float framebuffer, row-major from the top-left pixel. Colours are premultiplied
/// until finalization.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgba;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 0.0) {}

  double* pixel(int x, int y) { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }
  const double* pixel(int x, int y) const { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }
  std::size_t bytes() const { return rgba.size() * sizeof(double); }

  friend bool operator==(const Image&, const Image&) = default;
};

inline double max_abs_diff(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ConfigError("image size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rgba.size(); ++i) m = std::max(m, std::abs(a.rgba[i] - b.rgba[i]));
  return m;
}

/// PSNR over the RGB channels (peak 1).
inline double image_psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ConfigError("image size mismatch");
  std::vector<double> pa, pb;
  pa.reserve(a.rgba.size() / 4 * 3);
  pb.reserve(pa.capacity());
  for (std::size_t i = 0; i < a.rgba.size(); ++i) {
    if (i % 4 == 3) continue;
    pa.push_back(a.rgba[i]);
    pb.push_back(b.rgba[i]);
  }
  return volume::psnr(pa, pb);
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) os.put(static_cast<char>(to_byte(p[c])));
    }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

namespace detail {
inline void put_be32(std::string& s, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void png_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_be32(out, static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}
}  // namespace detail

/// 8-bit RGBA PNG (filter type 0 on every row).
inline std::string encode_png(const Image& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 4 * img.width));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back('\0');
    for (int x = 0; x < img.width; ++x) {
      const double* p = img.pixel(x, y);
      for (int c = 0; c < 4; ++c) raw.push_back(static_cast<char>(to_byte(p[c])));
    }
  }
  uLongf zlen = compressBound(raw.size());
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()), raw.size(), 6) !=
      Z_OK) {
    throw std::runtime_error("png: deflate failed");
  }
  z.resize(zlen);
  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_be32(ihdr, img.width);
  detail::put_be32(ihdr, img.height);
  ihdr += std::string("\x08\x06\x00\x00\x00", 5);  // 8-bit, RGBA, deflate, no filter, no interlace
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", z);
  detail::png_chunk(out, "IEND", "");
  return out;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const auto bytes = encode_png(img);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Writes PPM or PNG by extension.
inline void write_image(const std::filesystem::path& path, const Image& img) {
  if (path.extension() == ".png") {
    write_png(path, img);
  } else {
    write_ppm(path, img);
  }
}

}  // namespace dnr::vis
