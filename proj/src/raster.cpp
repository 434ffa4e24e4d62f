#include "docparse/raster.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace docparse {

Raster::Raster(int width, int height, uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("Raster: non-positive dimensions");
  }
  pixels_.assign(static_cast<size_t>(width) * height, fill);
}

void Raster::fill_rect(int x1, int y1, int x2, int y2, uint8_t v) {
  x1 = std::max(x1, 0);
  y1 = std::max(y1, 0);
  x2 = std::min(x2, width_);
  y2 = std::min(y2, height_);
  for (int y = y1; y < y2; ++y) {
    for (int x = x1; x < x2; ++x) set(x, y, v);
  }
}

namespace {

// Skips whitespace and '#' comments, then reads one ASCII token.
std::string next_token(const std::string& s, size_t& pos) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) {
    ++pos;
  }
  if (start == pos) throw std::runtime_error("PGM: truncated header");
  return s.substr(start, pos - start);
}

int parse_int_token(const std::string& s, size_t& pos, const char* what) {
  std::string tok = next_token(s, pos);
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("PGM: bad ") + what + " '" + tok +
                             "'");
  }
}

}  // namespace

Raster parse_pgm(const std::string& bytes) {
  size_t pos = 0;
  std::string magic = next_token(bytes, pos);
  if (magic != "P2" && magic != "P5") {
    throw std::runtime_error("PGM: unsupported magic '" + magic + "'");
  }
  int w = parse_int_token(bytes, pos, "width");
  int h = parse_int_token(bytes, pos, "height");
  int maxval = parse_int_token(bytes, pos, "maxval");
  if (w <= 0 || h <= 0) throw std::runtime_error("PGM: non-positive size");
  if (maxval <= 0 || maxval > 255) {
    throw std::runtime_error("PGM: only 8-bit images are supported");
  }
  Raster r(w, h, 0);
  size_t count = static_cast<size_t>(w) * h;
  if (magic == "P5") {
    if (pos >= bytes.size()) throw std::runtime_error("PGM: missing pixels");
    ++pos;  // single whitespace byte after maxval
    if (bytes.size() - pos < count) {
      throw std::runtime_error("PGM: truncated pixel data");
    }
    std::copy_n(reinterpret_cast<const uint8_t*>(bytes.data()) + pos, count,
                r.pixels().begin());
  } else {
    for (size_t i = 0; i < count; ++i) {
      int v = parse_int_token(bytes, pos, "pixel");
      if (v < 0 || v > maxval) throw std::runtime_error("PGM: pixel range");
      r.pixels()[i] = static_cast<uint8_t>(v);
    }
  }
  return r;
}

Raster read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("PGM: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pgm(buf.str());
}

std::string encode_pgm_binary(const Raster& r) {
  if (r.empty()) throw std::invalid_argument("PGM: empty raster");
  std::ostringstream out;
  out << "P5\n" << r.width() << " " << r.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.pixels().data()),
            static_cast<std::streamsize>(r.pixels().size()));
  return out.str();
}

void write_pgm_binary(const Raster& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("PGM: cannot write " + path);
  std::string bytes = encode_pgm_binary(r);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_pgm_ascii(const Raster& r, const std::string& path) {
  if (r.empty()) throw std::invalid_argument("PGM: empty raster");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("PGM: cannot write " + path);
  out << "P2\n" << r.width() << " " << r.height() << "\n255\n";
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      out << int(r.at(x, y)) << (x + 1 == r.width() ? "\n" : " ");
    }
  }
}

Raster resize_nearest(const Raster& src, int out_width, int out_height) {
  if (src.empty()) throw std::invalid_argument("resize: empty source");
  Raster out(out_width, out_height, 0);
  for (int y = 0; y < out_height; ++y) {
    // Sample the pixel whose center is nearest to this output center.
    int sy = std::min(
        static_cast<int>((static_cast<long long>(y) * 2 + 1) * src.height() /
                         (2LL * out_height)),
        src.height() - 1);
    for (int x = 0; x < out_width; ++x) {
      int sx = std::min(
          static_cast<int>((static_cast<long long>(x) * 2 + 1) * src.width() /
                           (2LL * out_width)),
          src.width() - 1);
      out.set(x, y, src.at(sx, sy));
    }
  }
  return out;
}

Raster crop(const Raster& src, const BBox& box) {
  if (!box.valid() || box.x1 < 0 || box.y1 < 0 || box.x2 > src.width() ||
      box.y2 > src.height()) {
    throw std::invalid_argument("crop: box outside raster");
  }
  Raster out(box.width(), box.height(), 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, src.at(box.x1 + x, box.y1 + y));
    }
  }
  return out;
}

Raster rotate_cw(const Raster& src) {
  Raster out(src.height(), src.width(), 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, src.at(y, src.height() - 1 - x));
    }
  }
  return out;
}

Raster rotate_ccw(const Raster& src) {
  Raster out(src.height(), src.width(), 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, src.at(src.width() - 1 - y, x));
    }
  }
  return out;
}

Raster rotate_180(const Raster& src) {
  Raster out(src.width(), src.height(), 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, src.at(src.width() - 1 - x, src.height() - 1 - y));
    }
  }
  return out;
}

Raster canonicalize_rotation(const Raster& src, Rotation r) {
  switch (healing_quarter_turns_cw(r)) {
    case 0:
      return src;
    case 1:
      return rotate_cw(src);
    case 2:
      return rotate_180(src);
    case 3:
      return rotate_ccw(src);
  }
  throw std::logic_error("canonicalize_rotation: bad turn count");
}

uint64_t fingerprint(const Raster& r) {
  std::string bytes = encode_pgm_binary(r);
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string fingerprint_hex(const Raster& r) {
  uint64_t h = fingerprint(r);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace docparse
