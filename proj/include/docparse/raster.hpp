#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docparse/geometry.hpp"
#include "docparse/layout.hpp"

namespace docparse {

// Minimal 8-bit grayscale image, row-major.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, uint8_t fill = 255);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  void set(int x, int y, uint8_t v) { pixels_[index(x, y)] = v; }

  const std::vector<uint8_t>& pixels() const { return pixels_; }
  std::vector<uint8_t>& pixels() { return pixels_; }

  // Axis-aligned filled rectangle, [x1,x2) x [y1,y2), clipped to bounds.
  void fill_rect(int x1, int y1, int x2, int y2, uint8_t v);

  bool operator==(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           pixels_ == other.pixels_;
  }

 private:
  size_t index(int x, int y) const {
    return static_cast<size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> pixels_;
};

// PGM input accepts both the ASCII (P2) and binary (P5) flavors; output
// pick is explicit. Parse errors throw std::runtime_error.
Raster read_pgm(const std::string& path);
Raster parse_pgm(const std::string& bytes);
void write_pgm_binary(const Raster& r, const std::string& path);
std::string encode_pgm_binary(const Raster& r);
void write_pgm_ascii(const Raster& r, const std::string& path);

// Nearest-neighbor sampling; aspect ratio is NOT preserved.
Raster resize_nearest(const Raster& src, int out_width, int out_height);

// Crop [x1,x2) x [y1,y2); the box must lie within the raster.
Raster crop(const Raster& src, const BBox& box);

Raster rotate_cw(const Raster& src);    // 90 degrees clockwise
Raster rotate_ccw(const Raster& src);   // 90 degrees counter-clockwise
Raster rotate_180(const Raster& src);

// Rotates a crop so its content reads upright, per the element's rotation
// tag: Left needs one CW turn, Right one CCW, Down a half turn.
Raster canonicalize_rotation(const Raster& src, Rotation r);

// FNV-1a 64-bit over the canonical binary encoding; stable across
// machines, used to key scripted backend responses to image content.
uint64_t fingerprint(const Raster& r);
std::string fingerprint_hex(const Raster& r);

}  // namespace docparse
