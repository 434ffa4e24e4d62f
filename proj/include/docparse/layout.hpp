#pragma once

#include <optional>
#include <string>
#include <vector>

#include "docparse/geometry.hpp"

namespace docparse {

// Orientation of an element's content relative to the page. The name says
// which way the content's "up" currently points, so `Left` means the text
// reads bottom-to-top and needs a clockwise quarter turn to heal.
enum class Rotation { Up, Down, Left, Right };

Rotation rotation_from_name(const std::string& name);
const char* rotation_name(Rotation r);

// Quarter-turn count (clockwise) that heals content with this rotation.
int healing_quarter_turns_cw(Rotation r);

enum class LayoutCategory {
  // Textual group.
  Text,
  Title,
  Phonetic,
  ImageCaption,
  ImageFootnote,
  TableCaption,
  TableFootnote,
  Code,
  CodeCaption,
  Algorithm,
  Reference,
  List,
  // Image group.
  Image,
  // Table group.
  Table,
  // Equation group.
  Equation,
  EquationBlock,
  // Page-margins group.
  Header,
  Footer,
  AsideText,
  PageNumber,
  PageFootnote,
  // Anything the detector emitted that we do not recognize.
  Unknown,
};

enum class CategoryGroup { Textual, Image, Table, Equation, PageMargins };

inline constexpr int kKnownCategoryCount = 21;

LayoutCategory category_from_name(const std::string& name);
const char* category_name(LayoutCategory c);
CategoryGroup group_of(LayoutCategory c);
const char* group_name(CategoryGroup g);

// All 21 recognized categories, in a stable order.
const std::vector<LayoutCategory>& known_categories();

struct LayoutElement {
  BBox bbox;                        // thumbnail coordinates
  LayoutCategory category = LayoutCategory::Unknown;
  std::string custom_label;         // raw label text when category == Unknown
  Rotation rotation = Rotation::Up;
  int order = 0;                    // reading-order index within the page

  bool operator==(const LayoutElement& other) const {
    return bbox == other.bbox && category == other.category &&
           custom_label == other.custom_label && rotation == other.rotation &&
           order == other.order;
  }
};

struct PageLayout {
  std::vector<LayoutElement> elements;  // sorted by reading order
  int native_width = 0;
  int native_height = 0;
  int thumbnail_side = kDefaultThumbnailSide;

  // Throws std::invalid_argument when an element is out of thumbnail bounds,
  // inverted, or the order indices are not 0..n-1 ascending.
  void validate() const;
};

// Everything the second stage needs to lift one element to native
// resolution.
struct CropSpec {
  BBox native_box;         // native coordinates
  Rotation rotation = Rotation::Up;
  ScaledSize scaled_size;  // size after token budgeting, multiples of patch
};

CropSpec make_crop_spec(const LayoutElement& element, const PageLayout& page,
                        int patch = kPatchSize,
                        int min_tokens = kMinPatchTokens,
                        int max_tokens = kMaxPatchTokens);

std::string page_layout_to_json(const PageLayout& page);
PageLayout page_layout_from_json(const std::string& text);

}  // namespace docparse
