#include "docparse/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "docparse/default_policy.hpp"
#include "docparse/layout_protocol.hpp"
#include "docparse/otsl.hpp"
#include "docparse/parallel.hpp"
#include "json.hpp"

namespace docparse {

// ---------------------------------------------------------------------------
// SamplingPolicy

namespace {

const char* group_key(CategoryGroup g) { return group_name(g); }

void apply_policy_json(std::map<CategoryGroup, SamplingParams>& by_group,
                       const nlohmann::json& j) {
  for (CategoryGroup g :
       {CategoryGroup::Textual, CategoryGroup::Image, CategoryGroup::Table,
        CategoryGroup::Equation, CategoryGroup::PageMargins}) {
    if (!j.contains(group_key(g))) continue;
    const auto& jg = j.at(group_key(g));
    SamplingParams& p = by_group[g];
    p.frequency_penalty = jg.value("frequency_penalty", p.frequency_penalty);
    p.presence_penalty = jg.value("presence_penalty", p.presence_penalty);
    p.max_new_tokens = jg.value("max_new_tokens", p.max_new_tokens);
    p.temperature = jg.value("temperature", p.temperature);
  }
}

void validate_policy(const std::map<CategoryGroup, SamplingParams>& by_group) {
  for (const auto& [group, p] : by_group) {
    if (p.frequency_penalty < 0.0 || p.frequency_penalty > 2.0 ||
        p.presence_penalty < 0.0 || p.presence_penalty > 2.0) {
      throw std::invalid_argument(
          std::string("sampling policy: penalties for group '") +
          group_name(group) + "' outside [0,2]");
    }
    if (p.max_new_tokens <= 0) {
      throw std::invalid_argument(
          std::string("sampling policy: non-positive token cap for group '") +
          group_name(group) + "'");
    }
  }
  const SamplingParams& textual = by_group.at(CategoryGroup::Textual);
  const SamplingParams& table = by_group.at(CategoryGroup::Table);
  if (textual.frequency_penalty < table.frequency_penalty ||
      textual.presence_penalty < table.presence_penalty) {
    throw std::invalid_argument(
        "sampling policy: textual penalties must be >= table penalties");
  }
}

}  // namespace

SamplingPolicy SamplingPolicy::defaults() {
  SamplingPolicy policy;
  for (CategoryGroup g :
       {CategoryGroup::Textual, CategoryGroup::Image, CategoryGroup::Table,
        CategoryGroup::Equation, CategoryGroup::PageMargins}) {
    policy.by_group_[g] = SamplingParams{};
  }
  nlohmann::json j = nlohmann::json::parse(detail::kDefaultSamplingPolicyJson);
  apply_policy_json(policy.by_group_, j);
  validate_policy(policy.by_group_);
  return policy;
}

SamplingPolicy SamplingPolicy::from_json(const std::string& text) {
  SamplingPolicy policy = defaults();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(std::string("sampling policy JSON: ") +
                                err.what());
  }
  apply_policy_json(policy.by_group_, j);
  validate_policy(policy.by_group_);
  return policy;
}

SamplingPolicy SamplingPolicy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("sampling policy: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const SamplingParams& SamplingPolicy::for_group(CategoryGroup group) const {
  return by_group_.at(group);
}

const char* block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Text:
      return "text";
    case BlockKind::Latex:
      return "latex";
    case BlockKind::TableHtml:
      return "table_html";
    case BlockKind::ImageRef:
      return "image_ref";
    case BlockKind::Skipped:
      return "skipped";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(InferenceBackend& backend, PipelineConfig config)
    : backend_(backend), config_(std::move(config)) {
  client_ = std::make_unique<BatchClient>(backend_, config_.max_in_flight,
                                          config_.retry);
}

Pipeline::~Pipeline() = default;

InferenceResponse Pipeline::submit(TaskKind task, Raster image,
                                   const SamplingParams& sampling) {
  uint64_t id = next_id_.fetch_add(1);
  return client_->call(make_request(id, task, std::move(image), sampling));
}

Raster Pipeline::make_thumbnail(const Raster& page_image) const {
  return resize_nearest(page_image, config_.thumbnail_side,
                        config_.thumbnail_side);
}

PageLayout Pipeline::stage1_layout(const Raster& page_image,
                                   std::vector<std::string>* diagnostics) {
  Raster thumbnail = make_thumbnail(page_image);
  InferenceResponse resp =
      submit(TaskKind::Layout, std::move(thumbnail), SamplingParams{});
  if (!resp.ok) {
    throw std::runtime_error("layout detection failed: " + resp.error_message);
  }

  LayoutParseResult parsed = parse_layout_tokens(resp.text);
  if (diagnostics) {
    if (parsed.empty_stream) {
      diagnostics->push_back("layout detection returned no records");
    }
    for (const ProtocolDiagnostic& d : parsed.diagnostics) {
      diagnostics->push_back("layout record at byte " +
                             std::to_string(d.offset) + ": " + d.reason);
    }
  }

  PageLayout layout;
  layout.native_width = page_image.width();
  layout.native_height = page_image.height();
  layout.thumbnail_side = config_.thumbnail_side;
  for (const LayoutElement& e : parsed.elements) {
    LayoutElement kept = e;
    // The detector occasionally runs past the frame; clamp rather than
    // reject, dropping only boxes that vanish entirely.
    kept.bbox.x1 = std::clamp(kept.bbox.x1, 0, config_.thumbnail_side);
    kept.bbox.x2 = std::clamp(kept.bbox.x2, 0, config_.thumbnail_side);
    kept.bbox.y1 = std::clamp(kept.bbox.y1, 0, config_.thumbnail_side);
    kept.bbox.y2 = std::clamp(kept.bbox.y2, 0, config_.thumbnail_side);
    if (!kept.bbox.valid()) {
      if (diagnostics) {
        diagnostics->push_back(
            "element " + std::to_string(e.order) +
            " dropped: box collapsed when clamped to the thumbnail frame");
      }
      continue;
    }
    kept.order = static_cast<int>(layout.elements.size());
    layout.elements.push_back(std::move(kept));
  }
  layout.validate();
  return layout;
}

Raster Pipeline::prepare_region(const Raster& page_image,
                                const LayoutElement& element,
                                const PageLayout& layout) const {
  CropSpec spec = make_crop_spec(element, layout, config_.patch,
                                 config_.min_tokens, config_.max_tokens);
  Raster region = crop(page_image, spec.native_box);
  Raster healed = canonicalize_rotation(region, element.rotation);
  return resize_nearest(healed, spec.scaled_size.width,
                        spec.scaled_size.height);
}

std::string Pipeline::adr_parse(const Raster& block_crop,
                                std::vector<std::string>* diagnostics) {
  const SamplingParams& formula_params =
      config_.policy.for_group(CategoryGroup::Equation);
  InferenceResponse seg =
      submit(TaskKind::Layout, block_crop, SamplingParams{});
  if (!seg.ok) {
    throw std::runtime_error("line segmentation failed: " + seg.error_message);
  }
  LayoutParseResult lines = parse_layout_tokens(seg.text);
  if (diagnostics) {
    for (const ProtocolDiagnostic& d : lines.diagnostics) {
      diagnostics->push_back("line record at byte " + std::to_string(d.offset) +
                             ": " + d.reason);
    }
  }

  if (lines.elements.empty()) {
    if (diagnostics) {
      diagnostics->push_back(
          "segmentation found no lines; recognizing the whole block");
    }
    InferenceResponse whole =
        submit(TaskKind::Formula, block_crop, formula_params);
    if (!whole.ok) {
      throw std::runtime_error("formula recognition failed: " +
                               whole.error_message);
    }
    return whole.text;
  }

  std::vector<std::string> pieces;
  pieces.reserve(lines.elements.size());
  for (const LayoutElement& line : lines.elements) {
    // Line boxes live in the thumbnail frame of the submitted crop.
    BBox native = map_to_native(line.bbox, block_crop.width(),
                                block_crop.height(), config_.thumbnail_side);
    Raster line_crop = crop(block_crop, native);
    ScaledSize size =
        budget_rescale(line_crop.width(), line_crop.height(), config_.patch,
                       config_.min_tokens, config_.max_tokens);
    Raster scaled = resize_nearest(line_crop, size.width, size.height);
    InferenceResponse resp =
        submit(TaskKind::Formula, std::move(scaled), formula_params);
    if (!resp.ok) {
      throw std::runtime_error("formula recognition failed on line " +
                               std::to_string(pieces.size()) + ": " +
                               resp.error_message);
    }
    pieces.push_back(resp.text);
  }

  if (pieces.size() == 1) return pieces[0];
  const std::string& env = config_.assembly.adr_environment;
  if (env == "newline") {
    std::string out;
    for (size_t i = 0; i < pieces.size(); ++i) {
      if (i) out += "\n";
      out += pieces[i];
    }
    return out;
  }
  std::string out = "\\begin{" + env + "} ";
  for (size_t i = 0; i < pieces.size(); ++i) {
    if (i) out += " \\\\ ";
    out += pieces[i];
  }
  out += " \\end{" + env + "}";
  return out;
}

namespace {

// Formula responses sometimes arrive wrapped in display-math delimiters;
// assembly adds its own, so strip one balanced outer pair.
std::string strip_math_delimiters(const std::string& text) {
  auto trim = [](const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  };
  std::string t = trim(text);
  if (t.size() >= 4 && t.compare(0, 2, "\\[") == 0 &&
      t.compare(t.size() - 2, 2, "\\]") == 0) {
    return trim(t.substr(2, t.size() - 4));
  }
  if (t.size() >= 4 && t.compare(0, 2, "$$") == 0 &&
      t.compare(t.size() - 2, 2, "$$") == 0) {
    return trim(t.substr(2, t.size() - 4));
  }
  return t;
}

}  // namespace

std::vector<ContentBlock> Pipeline::stage2_recognize(const Raster& page_image,
                                                     const PageLayout& layout) {
  std::vector<ContentBlock> blocks(layout.elements.size());

  parallel_for(
      layout.elements.size(), config_.max_in_flight, [&](size_t i) {
        const LayoutElement& element = layout.elements[i];
        ContentBlock& block = blocks[i];
        block.element = element;
        CategoryGroup group = group_of(element.category);

        if (group == CategoryGroup::Image) {
          block.kind = BlockKind::ImageRef;
          block.content = "element_" + std::to_string(element.order);
          return;
        }

        try {
          Raster region = prepare_region(page_image, element, layout);
          const SamplingParams& params = config_.policy.for_group(group);
          switch (group) {
            case CategoryGroup::Textual:
            case CategoryGroup::PageMargins: {
              InferenceResponse resp =
                  submit(TaskKind::Text, std::move(region), params);
              if (!resp.ok) throw std::runtime_error(resp.error_message);
              block.kind = BlockKind::Text;
              block.content = resp.text;
              break;
            }
            case CategoryGroup::Equation: {
              if (element.category == LayoutCategory::EquationBlock) {
                block.content = strip_math_delimiters(
                    adr_parse(region, &block.diagnostics));
              } else {
                InferenceResponse resp =
                    submit(TaskKind::Formula, std::move(region), params);
                if (!resp.ok) throw std::runtime_error(resp.error_message);
                block.content = strip_math_delimiters(resp.text);
              }
              block.kind = BlockKind::Latex;
              break;
            }
            case CategoryGroup::Table: {
              InferenceResponse resp =
                  submit(TaskKind::Table, std::move(region), params);
              if (!resp.ok) throw std::runtime_error(resp.error_message);
              OtslParseOutcome outcome = try_parse_otsl(resp.text);
              for (const OtslDiagnostic& d : outcome.diagnostics) {
                block.diagnostics.push_back("table token at byte " +
                                            std::to_string(d.offset) + ": " +
                                            d.reason);
              }
              if (!outcome.ok) {
                throw std::runtime_error("table structure rejected: " +
                                         outcome.error);
              }
              block.kind = BlockKind::TableHtml;
              block.content = grid_to_html(outcome.grid);
              break;
            }
            case CategoryGroup::Image:
              break;  // handled above
          }
        } catch (const std::exception& err) {
          block.kind = BlockKind::Skipped;
          block.content.clear();
          block.diagnostics.push_back(err.what());
        }
      });

  // Slots were filled by element index, so this is already reading order;
  // keep the sort as a guard against future reordering of the fill.
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const ContentBlock& a, const ContentBlock& b) {
                     return a.element.order < b.element.order;
                   });
  return blocks;
}

ParsedPage Pipeline::parse_page(const Raster& page_image, int page_index) {
  ParsedPage page;
  page.page_index = page_index;
  try {
    page.layout = stage1_layout(page_image, &page.diagnostics);
  } catch (const std::exception& err) {
    page.failed = true;
    page.diagnostics.push_back(err.what());
    return page;
  }
  page.blocks = stage2_recognize(page_image, page.layout);
  return page;
}

ParsedDocument Pipeline::parse_document(const std::vector<Raster>& page_images) {
  ParsedDocument doc;
  doc.options = config_.assembly;
  doc.pages.resize(page_images.size());
  parallel_for(page_images.size(), config_.max_in_flight, [&](size_t i) {
    doc.pages[i] = parse_page(page_images[i], static_cast<int>(i));
  });
  return doc;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

void emit_block(const ContentBlock& block, const AssemblyOptions& options,
                std::vector<std::string>& chunks) {
  switch (block.kind) {
    case BlockKind::Skipped:
      return;
    case BlockKind::Text: {
      if (block.element.category == LayoutCategory::Title) {
        chunks.push_back("# " + block.content);
      } else if (block.element.category == LayoutCategory::Code ||
                 block.element.category == LayoutCategory::Algorithm) {
        chunks.push_back("```\n" + block.content + "\n```");
      } else {
        chunks.push_back(block.content);
      }
      return;
    }
    case BlockKind::Latex: {
      if (options.math_delimiter == "brackets") {
        chunks.push_back("\\[\n" + block.content + "\n\\]");
      } else {
        chunks.push_back("$$\n" + block.content + "\n$$");
      }
      return;
    }
    case BlockKind::TableHtml:
      chunks.push_back(block.content);
      return;
    case BlockKind::ImageRef:
      chunks.push_back("![image](" +
                       (block.content.empty() ? "#" : block.content) + ")");
      return;
  }
}

}  // namespace

std::string assemble(const ParsedDocument& document) {
  std::vector<std::string> chunks;
  for (const ParsedPage& page : document.pages) {
    std::vector<std::string> margins;
    for (const ContentBlock& block : page.blocks) {
      bool margin =
          group_of(block.element.category) == CategoryGroup::PageMargins;
      if (margin) {
        if (document.options.include_margins && block.kind != BlockKind::Skipped) {
          margins.push_back(block.content);
        }
        continue;
      }
      emit_block(block, document.options, chunks);
    }
    if (!margins.empty()) {
      chunks.push_back("---");
      for (std::string& m : margins) chunks.push_back(std::move(m));
    }
  }
  if (chunks.empty()) return "";
  std::string out;
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (i) out += "\n\n";
    out += chunks[i];
  }
  out += "\n";
  return out;
}

std::string parsed_page_to_json(const ParsedPage& page) {
  nlohmann::ordered_json j;
  j["page_index"] = page.page_index;
  j["failed"] = page.failed;
  j["native_width"] = page.layout.native_width;
  j["native_height"] = page.layout.native_height;
  j["thumbnail_side"] = page.layout.thumbnail_side;
  j["diagnostics"] = page.diagnostics;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const ContentBlock& block : page.blocks) {
    nlohmann::ordered_json jb;
    jb["order"] = block.element.order;
    jb["bbox"] = {block.element.bbox.x1, block.element.bbox.y1,
                  block.element.bbox.x2, block.element.bbox.y2};
    jb["category"] = block.element.category == LayoutCategory::Unknown &&
                             !block.element.custom_label.empty()
                         ? block.element.custom_label
                         : category_name(block.element.category);
    jb["rotation"] = rotation_name(block.element.rotation);
    jb["kind"] = block_kind_name(block.kind);
    jb["content"] = block.content;
    jb["diagnostics"] = block.diagnostics;
    j["blocks"].push_back(std::move(jb));
  }
  return j.dump(2);
}

}  // namespace docparse
