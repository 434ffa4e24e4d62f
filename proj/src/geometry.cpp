#include "docparse/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace docparse {

namespace {

int scale_coord(int value, int native_dim, int thumbnail_side) {
  double scaled = static_cast<double>(value) * native_dim / thumbnail_side;
  long long rounded = std::llround(scaled);
  return static_cast<int>(std::clamp<long long>(rounded, 0, native_dim));
}

}  // namespace

BBox map_to_native(const BBox& box, int native_width, int native_height,
                   int thumbnail_side) {
  if (!box.valid()) {
    throw std::invalid_argument("map_to_native: invalid thumbnail box");
  }
  if (native_width <= 0 || native_height <= 0 || thumbnail_side <= 0) {
    throw std::invalid_argument("map_to_native: non-positive dimensions");
  }
  BBox out;
  out.space = CoordSpace::Native;
  out.x1 = scale_coord(box.x1, native_width, thumbnail_side);
  out.x2 = scale_coord(box.x2, native_width, thumbnail_side);
  out.y1 = scale_coord(box.y1, native_height, thumbnail_side);
  out.y2 = scale_coord(box.y2, native_height, thumbnail_side);
  if (out.x1 >= out.x2 || out.y1 >= out.y2) {
    throw DegenerateRegionError(
        "map_to_native: region collapsed to zero area at native resolution");
  }
  return out;
}

ScaledSize budget_rescale(int width, int height, int patch, int min_tokens,
                          int max_tokens) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("budget_rescale: non-positive dimensions");
  }
  if (patch <= 0 || min_tokens <= 0 || max_tokens < min_tokens) {
    throw std::invalid_argument("budget_rescale: bad budget parameters");
  }

  auto ceil_div = [](long long a, long long b) { return (a + b - 1) / b; };
  long long tw = ceil_div(width, patch);
  long long th = ceil_div(height, patch);

  if (tw * th >= min_tokens && tw * th <= max_tokens) {
    return ScaledSize{static_cast<int>(tw * patch),
                      static_cast<int>(th * patch)};
  }

  // Raw (fractional) token count of the unscaled crop.
  double raw = (static_cast<double>(width) / patch) *
               (static_cast<double>(height) / patch);
  long long pw = 0;
  long long ph = 0;
  if (tw * th > max_tokens) {
    double scale = std::sqrt(static_cast<double>(max_tokens) / raw);
    pw = static_cast<long long>(std::floor(width * scale / patch));
    ph = static_cast<long long>(std::floor(height * scale / patch));
    pw = std::max<long long>(pw, 1);
    ph = std::max<long long>(ph, 1);
    // Clamping a sliver dimension to one patch can push the product back
    // over budget; shave the larger side until it fits.
    while (pw * ph > max_tokens) {
      if (pw >= ph) {
        --pw;
      } else {
        --ph;
      }
    }
  } else {
    double scale = std::sqrt(static_cast<double>(min_tokens) / raw);
    pw = ceil_div(static_cast<long long>(std::ceil(width * scale)), patch);
    ph = ceil_div(static_cast<long long>(std::ceil(height * scale)), patch);
  }
  while (pw * ph < min_tokens) {
    if (pw <= ph) {
      ++pw;
    } else {
      ++ph;
    }
  }
  return ScaledSize{static_cast<int>(pw * patch), static_cast<int>(ph * patch)};
}

}  // namespace docparse
