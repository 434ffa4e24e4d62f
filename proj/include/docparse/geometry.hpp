#ifndef DOCPARSE_GEOMETRY_HPP
#define DOCPARSE_GEOMETRY_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace docparse {

// Coordinate frames: Stage-I layout boxes live on the fixed square thumbnail,
// Stage-II crops live on the original page raster.
enum class CoordSpace { Thumbnail, Native };

inline constexpr int kDefaultThumbnailSide = 1036;
inline constexpr int kPatchSize = 28;
inline constexpr int kMinPatchTokens = 4;
inline constexpr int kMaxPatchTokens = 2048;

struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  CoordSpace space = CoordSpace::Thumbnail;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool valid() const { return x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2; }
  bool contains(const BBox& other) const {
    return x1 <= other.x1 && y1 <= other.y1 && x2 >= other.x2 &&
           y2 >= other.y2;
  }

  friend bool operator==(const BBox& a, const BBox& b) {
    return a.x1 == b.x1 && a.y1 == b.y1 && a.x2 == b.x2 && a.y2 == b.y2 &&
           a.space == b.space;
  }
};

class DegenerateRegionError : public std::runtime_error {
 public:
  explicit DegenerateRegionError(const std::string& what)
      : std::runtime_error(what) {}
};

// Maps a thumbnail-space box onto the native page raster. Each coordinate is
// scaled by native_dim/thumbnail_side along its axis, rounded to the nearest
// integer and clamped to the page bounds. Throws DegenerateRegionError when
// rounding collapses the box to zero width or height.
BBox map_to_native(const BBox& box, int native_width, int native_height,
                   int thumbnail_side = kDefaultThumbnailSide);

struct ScaledSize {
  int width = 0;
  int height = 0;

  int token_count(int patch = kPatchSize) const {
    return (width / patch) * (height / patch);
  }
  friend bool operator==(const ScaledSize& a, const ScaledSize& b) {
    return a.width == b.width && a.height == b.height;
  }
};

// Fits a crop into the patch-token budget. Output dims are positive multiples
// of `patch` whose token count lies in [min_tokens, max_tokens]. Dimensions
// already inside the budget are only rounded up to patch multiples; otherwise
// a uniform sqrt(max_tokens/raw_tokens) (or min_tokens) scale is applied,
// floored on downscale and ceiled on upscale so the budget is never exceeded.
// Idempotent on its own output.
ScaledSize budget_rescale(int width, int height, int patch = kPatchSize,
                          int min_tokens = kMinPatchTokens,
                          int max_tokens = kMaxPatchTokens);

}  // namespace docparse

#endif  // DOCPARSE_GEOMETRY_HPP
