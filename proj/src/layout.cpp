#include "docparse/layout.hpp"

#include <array>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace docparse {

namespace {

struct CategoryEntry {
  LayoutCategory category;
  const char* name;
  CategoryGroup group;
};

constexpr std::array<CategoryEntry, kKnownCategoryCount> kCategoryTable = {{
    {LayoutCategory::Text, "text", CategoryGroup::Textual},
    {LayoutCategory::Title, "title", CategoryGroup::Textual},
    {LayoutCategory::Phonetic, "phonetic", CategoryGroup::Textual},
    {LayoutCategory::ImageCaption, "image_caption", CategoryGroup::Textual},
    {LayoutCategory::ImageFootnote, "image_footnote", CategoryGroup::Textual},
    {LayoutCategory::TableCaption, "table_caption", CategoryGroup::Textual},
    {LayoutCategory::TableFootnote, "table_footnote", CategoryGroup::Textual},
    {LayoutCategory::Code, "code", CategoryGroup::Textual},
    {LayoutCategory::CodeCaption, "code_caption", CategoryGroup::Textual},
    {LayoutCategory::Algorithm, "algorithm", CategoryGroup::Textual},
    {LayoutCategory::Reference, "reference", CategoryGroup::Textual},
    {LayoutCategory::List, "list", CategoryGroup::Textual},
    {LayoutCategory::Image, "image", CategoryGroup::Image},
    {LayoutCategory::Table, "table", CategoryGroup::Table},
    {LayoutCategory::Equation, "equation", CategoryGroup::Equation},
    {LayoutCategory::EquationBlock, "equation_block", CategoryGroup::Equation},
    {LayoutCategory::Header, "header", CategoryGroup::PageMargins},
    {LayoutCategory::Footer, "footer", CategoryGroup::PageMargins},
    {LayoutCategory::AsideText, "aside_text", CategoryGroup::PageMargins},
    {LayoutCategory::PageNumber, "page_number", CategoryGroup::PageMargins},
    {LayoutCategory::PageFootnote, "page_footnote", CategoryGroup::PageMargins},
}};

}  // namespace

Rotation rotation_from_name(const std::string& name) {
  if (name == "up") return Rotation::Up;
  if (name == "down") return Rotation::Down;
  if (name == "left") return Rotation::Left;
  if (name == "right") return Rotation::Right;
  throw std::invalid_argument("rotation_from_name: unknown rotation '" + name +
                              "'");
}

const char* rotation_name(Rotation r) {
  switch (r) {
    case Rotation::Up:
      return "up";
    case Rotation::Down:
      return "down";
    case Rotation::Left:
      return "left";
    case Rotation::Right:
      return "right";
  }
  throw std::logic_error("rotation_name: bad enum value");
}

int healing_quarter_turns_cw(Rotation r) {
  switch (r) {
    case Rotation::Up:
      return 0;
    case Rotation::Left:
      return 1;  // content's up points left; one CW turn rights it
    case Rotation::Down:
      return 2;
    case Rotation::Right:
      return 3;  // equivalent to one CCW turn
  }
  throw std::logic_error("healing_quarter_turns_cw: bad enum value");
}

LayoutCategory category_from_name(const std::string& name) {
  static const std::unordered_map<std::string, LayoutCategory> lookup = [] {
    std::unordered_map<std::string, LayoutCategory> m;
    for (const auto& e : kCategoryTable) m.emplace(e.name, e.category);
    return m;
  }();
  auto it = lookup.find(name);
  return it == lookup.end() ? LayoutCategory::Unknown : it->second;
}

const char* category_name(LayoutCategory c) {
  for (const auto& e : kCategoryTable) {
    if (e.category == c) return e.name;
  }
  return "unknown";
}

CategoryGroup group_of(LayoutCategory c) {
  for (const auto& e : kCategoryTable) {
    if (e.category == c) return e.group;
  }
  // Labels we cannot place are treated as plain text regions.
  return CategoryGroup::Textual;
}

const char* group_name(CategoryGroup g) {
  switch (g) {
    case CategoryGroup::Textual:
      return "textual";
    case CategoryGroup::Image:
      return "image";
    case CategoryGroup::Table:
      return "table";
    case CategoryGroup::Equation:
      return "equation";
    case CategoryGroup::PageMargins:
      return "page_margins";
  }
  throw std::logic_error("group_name: bad enum value");
}

const std::vector<LayoutCategory>& known_categories() {
  static const std::vector<LayoutCategory> all = [] {
    std::vector<LayoutCategory> v;
    v.reserve(kCategoryTable.size());
    for (const auto& e : kCategoryTable) v.push_back(e.category);
    return v;
  }();
  return all;
}

void PageLayout::validate() const {
  if (native_width <= 0 || native_height <= 0 || thumbnail_side <= 0) {
    throw std::invalid_argument("PageLayout: non-positive page dimensions");
  }
  for (size_t i = 0; i < elements.size(); ++i) {
    const LayoutElement& e = elements[i];
    if (!e.bbox.valid()) {
      throw std::invalid_argument("PageLayout: element " + std::to_string(i) +
                                  " has an inverted or empty box");
    }
    if (e.bbox.space != CoordSpace::Thumbnail) {
      throw std::invalid_argument("PageLayout: element " + std::to_string(i) +
                                  " box is not in thumbnail coordinates");
    }
    if (e.bbox.x1 < 0 || e.bbox.y1 < 0 || e.bbox.x2 > thumbnail_side ||
        e.bbox.y2 > thumbnail_side) {
      throw std::invalid_argument("PageLayout: element " + std::to_string(i) +
                                  " box exceeds thumbnail bounds");
    }
    if (e.order != static_cast<int>(i)) {
      throw std::invalid_argument(
          "PageLayout: reading-order indices must be 0..n-1 ascending");
    }
  }
}

CropSpec make_crop_spec(const LayoutElement& element, const PageLayout& page,
                        int patch, int min_tokens, int max_tokens) {
  CropSpec spec;
  spec.native_box = map_to_native(element.bbox, page.native_width,
                                  page.native_height, page.thumbnail_side);
  spec.rotation = element.rotation;
  int w = spec.native_box.width();
  int h = spec.native_box.height();
  // Budgeting happens on the healed crop, after any quarter turn.
  if (healing_quarter_turns_cw(element.rotation) % 2 == 1) std::swap(w, h);
  spec.scaled_size = budget_rescale(w, h, patch, min_tokens, max_tokens);
  return spec;
}

std::string page_layout_to_json(const PageLayout& page) {
  nlohmann::ordered_json j;
  j["native_width"] = page.native_width;
  j["native_height"] = page.native_height;
  j["thumbnail_side"] = page.thumbnail_side;
  j["elements"] = nlohmann::ordered_json::array();
  for (const LayoutElement& e : page.elements) {
    nlohmann::ordered_json je;
    je["bbox"] = {e.bbox.x1, e.bbox.y1, e.bbox.x2, e.bbox.y2};
    je["category"] = e.category == LayoutCategory::Unknown && !e.custom_label.empty()
                         ? e.custom_label
                         : category_name(e.category);
    je["rotation"] = rotation_name(e.rotation);
    je["order"] = e.order;
    j["elements"].push_back(std::move(je));
  }
  return j.dump(2);
}

PageLayout page_layout_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(std::string("page layout JSON: ") + err.what());
  }
  PageLayout page;
  page.native_width = j.at("native_width").get<int>();
  page.native_height = j.at("native_height").get<int>();
  page.thumbnail_side = j.value("thumbnail_side", kDefaultThumbnailSide);
  for (const auto& je : j.at("elements")) {
    LayoutElement e;
    const auto& box = je.at("bbox");
    if (!box.is_array() || box.size() != 4) {
      throw std::invalid_argument("page layout JSON: bbox must be [x1,y1,x2,y2]");
    }
    e.bbox = BBox{box[0].get<int>(), box[1].get<int>(), box[2].get<int>(),
                  box[3].get<int>(), CoordSpace::Thumbnail};
    std::string cat = je.at("category").get<std::string>();
    e.category = category_from_name(cat);
    if (e.category == LayoutCategory::Unknown) e.custom_label = cat;
    e.rotation = rotation_from_name(je.value("rotation", "up"));
    e.order = je.at("order").get<int>();
    page.elements.push_back(std::move(e));
  }
  page.validate();
  return page;
}

}  // namespace docparse
