#include "tcal/png_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "tcal/errors.hpp"

namespace tcal {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& body) {
  std::vector<std::uint8_t> buf;
  put_u32(buf, static_cast<std::uint32_t>(body.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), body.begin(), body.end());
  const auto crc =
      crc32(0, buf.data() + 4, static_cast<uInt>(buf.size() - 4));  // type + data
  put_u32(buf, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

// Scanlines with the per-row filter byte 0, deflated at default level.
void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
  if (width <= 0 || height <= 0) throw ValidationError("png: empty image");

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
  const size_t stride = static_cast<size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + y * stride, pixels.begin() + (y + 1) * stride);
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw NumericalError("png: deflate failed");
  comp.resize(comp_len);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("png: cannot write " + path);
  static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(magic), 8);

  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);               // grayscale / truecolour
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", comp);
  write_chunk(out, "IEND", {});
  if (!out) throw ValidationError("png: write failed for " + path);
}

}  // namespace

void save_png_gray(const ScalarImage& img, const std::string& path) {
  std::vector<std::uint8_t> pixels(img.pixel_count());
  for (size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::floor(img.data[i] + 0.5);
    pixels[i] = static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
  }
  write_png(path, img.width, img.height, 1, pixels);
}

void save_png_rgb(const RgbImage& img, const std::string& path) {
  write_png(path, img.width, img.height, 3, img.data);
}

}  // namespace tcal
