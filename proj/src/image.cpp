#include "tcal/image.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tcal/errors.hpp"

namespace tcal {

double bilinear_sample(const ScalarImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = img.at_clamped(x0, y0);
  const double v10 = img.at_clamped(x0 + 1, y0);
  const double v01 = img.at_clamped(x0, y0 + 1);
  const double v11 = img.at_clamped(x0 + 1, y0 + 1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
int next_pnm_int(std::istream& in) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  if (c == EOF) throw ValidationError("pgm: truncated header");
  std::string tok;
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw ValidationError("pgm: bad header token '" + tok + "'");
  }
}

}  // namespace

ScalarImage load_pgm(const std::string& path, int* maxval_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("pgm: cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw ValidationError("pgm: not a P5 file: " + path);
  const int w = next_pnm_int(in);
  const int h = next_pnm_int(in);
  const int maxval = next_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw ValidationError("pgm: bad dimensions in " + path);
  if (maxval_out) *maxval_out = maxval;

  ScalarImage img(w, h);
  const size_t n = img.pixel_count();
  if (maxval <= 255) {
    std::vector<uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) throw ValidationError("pgm: truncated pixel data in " + path);
    for (size_t i = 0; i < n; ++i) img.data[i] = buf[i];
  } else {
    std::vector<uint8_t> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
    if (!in) throw ValidationError("pgm: truncated pixel data in " + path);
    for (size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<double>((static_cast<uint16_t>(buf[2 * i]) << 8) | buf[2 * i + 1]);
  }
  return img;
}

void save_pgm(const ScalarImage& img, const std::string& path, int maxval) {
  if (img.width <= 0 || img.height <= 0) throw ValidationError("pgm: empty image");
  if (maxval <= 0 || maxval > 65535) throw ValidationError("pgm: maxval out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("pgm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  const size_t n = img.pixel_count();
  auto quantise = [maxval](double v) -> uint32_t {
    double r = std::floor(v + 0.5);
    if (r < 0) r = 0;
    if (r > maxval) r = maxval;
    return static_cast<uint32_t>(r);
  };
  if (maxval <= 255) {
    std::vector<uint8_t> buf(n);
    for (size_t i = 0; i < n; ++i) buf[i] = static_cast<uint8_t>(quantise(img.data[i]));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n));
  } else {
    std::vector<uint8_t> buf(n * 2);
    for (size_t i = 0; i < n; ++i) {
      const uint32_t v = quantise(img.data[i]);
      buf[2 * i] = static_cast<uint8_t>(v >> 8);
      buf[2 * i + 1] = static_cast<uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n * 2));
  }
  if (!out) throw ValidationError("pgm: write failed for " + path);
}

ScalarImage load_raw_f32(const std::string& path) {
  std::ifstream meta(path + ".json");
  if (!meta) throw ValidationError("raw: missing sidecar " + path + ".json");
  std::stringstream ss;
  ss << meta.rdbuf();
  const std::string s = ss.str();
  auto grab_int = [&s, &path](const std::string& key) {
    const auto pos = s.find("\"" + key + "\"");
    if (pos == std::string::npos) throw ValidationError("raw: sidecar missing " + key + " for " + path);
    auto colon = s.find(':', pos);
    if (colon == std::string::npos) throw ValidationError("raw: malformed sidecar for " + path);
    return std::stoi(s.substr(colon + 1));
  };
  const int w = grab_int("width");
  const int h = grab_int("height");
  if (s.find("\"f32\"") == std::string::npos)
    throw ValidationError("raw: sidecar dtype is not f32 for " + path);
  if (w <= 0 || h <= 0) throw ValidationError("raw: bad dimensions for " + path);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("raw: cannot open " + path);
  ScalarImage img(w, h);
  std::vector<float> buf(img.pixel_count());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw ValidationError("raw: truncated data in " + path);
  for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
  return img;
}

void save_raw_f32(const ScalarImage& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) throw ValidationError("raw: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("raw: cannot write " + path);
  std::vector<float> buf(img.pixel_count());
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.data[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  std::ofstream meta(path + ".json");
  meta << "{\"width\":" << img.width << ",\"height\":" << img.height << ",\"dtype\":\"f32\"}\n";
  if (!out || !meta) throw ValidationError("raw: write failed for " + path);
}

}  // namespace tcal
