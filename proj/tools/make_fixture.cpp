// make_fixture - regenerates the synthetic 3-page parse fixture: page
// images, the scripted backend responses keyed by content fingerprint, and
// the frozen expected outputs. Run from the repo root:
//   make_fixture tests/fixtures/pipeline

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "docparse/backend.hpp"
#include "docparse/layout.hpp"
#include "docparse/layout_protocol.hpp"
#include "docparse/pipeline.hpp"
#include "docparse/raster.hpp"

namespace fs = std::filesystem;
using namespace docparse;

namespace {

constexpr int kNativeW = 200;
constexpr int kNativeH = 260;

struct FixtureElement {
  LayoutElement element;
  std::string response;  // second-stage canned output ("" for image group)
};

struct FixturePage {
  std::vector<FixtureElement> elements;
  Raster image{kNativeW, kNativeH, 255};
};

LayoutElement make_element(int order, LayoutCategory category, BBox box,
                           Rotation rotation = Rotation::Up) {
  LayoutElement e;
  e.order = order;
  e.category = category;
  e.bbox = box;
  e.bbox.space = CoordSpace::Thumbnail;
  e.rotation = rotation;
  return e;
}

BBox thumb_box(int x1, int y1, int x2, int y2) {
  return BBox{x1, y1, x2, y2, CoordSpace::Thumbnail};
}

// Paints the element's native footprint with a fill unique to (page,
// element) so every prepared crop has a distinct fingerprint.
void draw_element(FixturePage& page, const LayoutElement& e, uint8_t fill,
                  bool split_halves) {
  PageLayout layout;
  layout.native_width = kNativeW;
  layout.native_height = kNativeH;
  BBox native = map_to_native(e.bbox, kNativeW, kNativeH);
  if (split_halves) {
    int mid = (native.y1 + native.y2) / 2;
    page.image.fill_rect(native.x1, native.y1, native.x2, mid, fill);
    page.image.fill_rect(native.x1, mid, native.x2, native.y2, fill + 5);
  } else {
    page.image.fill_rect(native.x1, native.y1, native.x2, native.y2, fill);
  }
}

std::vector<FixturePage> build_pages() {
  std::vector<FixturePage> pages(3);

  pages[0].elements = {
      {make_element(0, LayoutCategory::Title, thumb_box(60, 40, 976, 120)),
       "Synthetic Fixture Alpha"},
      {make_element(1, LayoutCategory::Text, thumb_box(60, 160, 976, 420)),
       "First body paragraph of the fixture. It exists to give the text "
       "recognizer something stable to return."},
      {make_element(2, LayoutCategory::Image, thumb_box(120, 460, 700, 760)),
       ""},
      {make_element(3, LayoutCategory::ImageCaption,
                    thumb_box(120, 790, 700, 860)),
       "Figure 1: synthetic block diagram."},
      {make_element(4, LayoutCategory::Footer, thumb_box(60, 950, 976, 1010)),
       "Fixture footer line"},
  };

  pages[1].elements = {
      {make_element(0, LayoutCategory::Text, thumb_box(60, 60, 976, 300)),
       "Second page opens with a paragraph before the display math."},
      {make_element(1, LayoutCategory::EquationBlock,
                    thumb_box(160, 360, 880, 680)),
       ""},  // handled by line segmentation entries
      {make_element(2, LayoutCategory::Equation, thumb_box(260, 720, 800, 820)),
       "\\[ E = m c^2 \\]"},
      {make_element(3, LayoutCategory::PageNumber,
                    thumb_box(480, 940, 560, 1000)),
       "7"},
  };

  pages[2].elements = {
      {make_element(0, LayoutCategory::TableCaption,
                    thumb_box(60, 60, 976, 130)),
       "Table 1: synthetic comparison."},
      {make_element(1, LayoutCategory::Table, thumb_box(100, 180, 940, 700),
                    Rotation::Left),
       "<fcel>Model<fcel>A<fcel>B<nl>"
       "<fcel>combined<lcel><lcel><nl>"
       "<fcel>X<fcel>1<fcel>2<nl>"},
      {make_element(2, LayoutCategory::Text, thumb_box(60, 760, 976, 980)),
       "Closing paragraph under the rotated table."},
  };

  for (size_t p = 0; p < pages.size(); ++p) {
    for (size_t k = 0; k < pages[p].elements.size(); ++k) {
      const LayoutElement& e = pages[p].elements[k].element;
      uint8_t fill = static_cast<uint8_t>(40 + p * 60 + k * 13);
      bool split = e.category == LayoutCategory::EquationBlock;
      draw_element(pages[p], e, fill, split);
    }
  }
  return pages;
}

PageLayout layout_of(const FixturePage& page) {
  PageLayout layout;
  layout.native_width = kNativeW;
  layout.native_height = kNativeH;
  for (const FixtureElement& fe : page.elements) {
    layout.elements.push_back(fe.element);
  }
  layout.validate();
  return layout;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out_dir = argc > 1 ? argv[1] : "tests/fixtures/pipeline";
  std::vector<FixturePage> pages = build_pages();

  // Pages go to disk first and are read back, so fingerprints are taken on
  // exactly the bytes the parser will see.
  fs::create_directories(out_dir);
  std::vector<Raster> images;
  for (size_t p = 0; p < pages.size(); ++p) {
    char name[32];
    std::snprintf(name, sizeof(name), "page_%03zu.pgm", p);
    write_pgm_ascii(pages[p].image, (out_dir / name).string());
    images.push_back(read_pgm((out_dir / name).string()));
  }

  MockBackend placeholder;  // pipeline instance only used for preprocessing
  Pipeline prep(placeholder);

  nlohmann::ordered_json script;
  script["jitter"] = {{"seed", 42}, {"max_ms", 15}};
  script["entries"] = nlohmann::ordered_json::array();
  std::set<std::string> seen_keys;
  auto add_entry = [&](TaskKind task, const Raster& image,
                       const std::string& response) {
    std::string fp = fingerprint_hex(image);
    std::string key = std::string(task_name(task)) + "/" + fp;
    if (!seen_keys.insert(key).second) {
      throw std::runtime_error("fingerprint collision on " + key);
    }
    script["entries"].push_back({{"task", task_name(task)},
                                 {"fingerprint", fp},
                                 {"responses", {response}}});
  };

  const std::string line1_latex = "a &= b + c";
  const std::string line2_latex = "&= d - e";
  const BBox line1_box = thumb_box(0, 0, 1036, 490);
  const BBox line2_box = thumb_box(0, 560, 1036, 1036);

  for (size_t p = 0; p < pages.size(); ++p) {
    PageLayout layout = layout_of(pages[p]);
    add_entry(TaskKind::Layout, prep.make_thumbnail(images[p]),
              serialize_layout_tokens(layout.elements));

    for (const FixtureElement& fe : pages[p].elements) {
      CategoryGroup group = group_of(fe.element.category);
      if (group == CategoryGroup::Image) continue;
      Raster region = prep.prepare_region(images[p], fe.element, layout);
      switch (group) {
        case CategoryGroup::Textual:
        case CategoryGroup::PageMargins:
          add_entry(TaskKind::Text, region, fe.response);
          break;
        case CategoryGroup::Table:
          add_entry(TaskKind::Table, region, fe.response);
          break;
        case CategoryGroup::Equation: {
          if (fe.element.category != LayoutCategory::EquationBlock) {
            add_entry(TaskKind::Formula, region, fe.response);
            break;
          }
          // The block first gets segmented into two lines, then each line
          // is recognized on its own sub-crop.
          LayoutElement l1 = make_element(0, LayoutCategory::Equation, line1_box);
          LayoutElement l2 = make_element(1, LayoutCategory::Equation, line2_box);
          add_entry(TaskKind::Layout, region,
                    serialize_layout_tokens({l1, l2}));
          for (const auto& [box, latex] :
               {std::pair{line1_box, line1_latex},
                std::pair{line2_box, line2_latex}}) {
            BBox native = map_to_native(box, region.width(), region.height());
            Raster line = crop(region, native);
            ScaledSize size = budget_rescale(line.width(), line.height());
            add_entry(TaskKind::Formula,
                      resize_nearest(line, size.width, size.height), latex);
          }
          break;
        }
        case CategoryGroup::Image:
          break;
      }
    }
  }

  write_text(out_dir / "mock_script.json", script.dump(2) + "\n");

  // Freeze the end-to-end outputs by running the real pipeline against the
  // script we just wrote.
  MockBackend backend = MockBackend::from_file((out_dir / "mock_script.json").string());
  backend.set_sleep_for_jitter(false);
  Pipeline pipeline(backend);
  ParsedDocument doc = pipeline.parse_document(images);

  for (const ParsedPage& page : doc.pages) {
    if (page.failed) {
      throw std::runtime_error("fixture page " +
                               std::to_string(page.page_index) + " failed");
    }
    for (const ContentBlock& block : page.blocks) {
      if (block.kind == BlockKind::Skipped) {
        throw std::runtime_error("fixture block skipped on page " +
                                 std::to_string(page.page_index) + ": " +
                                 (block.diagnostics.empty()
                                      ? std::string("?")
                                      : block.diagnostics.front()));
      }
    }
    char stem[32];
    std::snprintf(stem, sizeof(stem), "page_%03d", page.page_index);
    write_text(out_dir / "golden" / (std::string(stem) + ".layout.json"),
               page_layout_to_json(page.layout));
    write_text(out_dir / "golden" / (std::string(stem) + ".blocks.json"),
               parsed_page_to_json(page));
  }
  write_text(out_dir / "golden" / "doc.md", assemble(doc));

  std::cout << "fixture written to " << out_dir.string() << " ("
            << script["entries"].size() << " scripted responses)\n";
  return 0;
}
