#pragma once

#include <map>
#include <string>
#include <vector>

#include "docparse/backend.hpp"
#include "docparse/layout.hpp"
#include "docparse/raster.hpp"

namespace docparse {

// Per-group decoding parameters. Repetition penalties are highest for
// running text and lowest for tables, where legitimate token repetition
// is structural; that ordering is validated whenever a policy is loaded.
class SamplingPolicy {
 public:
  // The compiled-in copy of configs/sampling_policy.json.
  static SamplingPolicy defaults();
  static SamplingPolicy from_json(const std::string& text);
  static SamplingPolicy from_file(const std::string& path);

  const SamplingParams& for_group(CategoryGroup group) const;
  const SamplingParams& for_category(LayoutCategory category) const {
    return for_group(group_of(category));
  }

 private:
  std::map<CategoryGroup, SamplingParams> by_group_;
};

enum class BlockKind { Text, Latex, TableHtml, ImageRef, Skipped };

const char* block_kind_name(BlockKind kind);

struct ContentBlock {
  LayoutElement element;
  BlockKind kind = BlockKind::Skipped;
  std::string content;
  std::vector<std::string> diagnostics;
};

struct AssemblyOptions {
  bool include_margins = false;
  std::string math_delimiter = "$$";   // or "\\[" style via "brackets"
  std::string adr_environment = "aligned";  // "aligned" | "align" | "newline"
};

struct ParsedPage {
  int page_index = 0;
  PageLayout layout;
  std::vector<ContentBlock> blocks;  // same order as layout.elements
  std::vector<std::string> diagnostics;
  bool failed = false;  // first-stage detection never produced a layout
};

struct ParsedDocument {
  std::vector<ParsedPage> pages;
  AssemblyOptions options;
};

struct PipelineConfig {
  int thumbnail_side = kDefaultThumbnailSide;
  int patch = kPatchSize;
  int min_tokens = kMinPatchTokens;
  int max_tokens = kMaxPatchTokens;
  int max_in_flight = 8;
  RetryPolicy retry;
  SamplingPolicy policy = SamplingPolicy::defaults();
  AssemblyOptions assembly;
};

// Two-stage orchestrator. The first stage reads the whole page at a fixed
// square thumbnail resolution and emits the element list; the second stage
// revisits each element at native resolution under the patch-token budget.
class Pipeline {
 public:
  Pipeline(InferenceBackend& backend, PipelineConfig config = {});
  ~Pipeline();

  PageLayout stage1_layout(const Raster& page_image,
                           std::vector<std::string>* diagnostics = nullptr);

  std::vector<ContentBlock> stage2_recognize(const Raster& page_image,
                                             const PageLayout& layout);

  ParsedPage parse_page(const Raster& page_image, int page_index);

  // Pages and their elements are processed concurrently up to the
  // configured in-flight bound; the result is deterministic regardless of
  // completion order because every block lands at its element's slot.
  ParsedDocument parse_document(const std::vector<Raster>& page_images);

  // Compound-formula handling: the block crop is segmented into atomic
  // lines with the detection task, each line is recognized separately, and
  // the pieces are recombined (2+ lines joined in an aligned environment).
  // Zero detected lines falls back to recognizing the whole crop.
  std::string adr_parse(const Raster& block_crop,
                        std::vector<std::string>* diagnostics = nullptr);

  // The exact image the second stage submits for an element: native crop,
  // healed to upright, resized to its budgeted size. Exposed so fixtures
  // and tests can address scripted responses by content fingerprint.
  Raster prepare_region(const Raster& page_image, const LayoutElement& element,
                        const PageLayout& layout) const;
  Raster make_thumbnail(const Raster& page_image) const;

  const PipelineConfig& config() const { return config_; }

 private:
  InferenceResponse submit(TaskKind task, Raster image,
                           const SamplingParams& sampling);

  InferenceBackend& backend_;
  PipelineConfig config_;
  std::unique_ptr<BatchClient> client_;
  std::atomic<uint64_t> next_id_{1};
};

std::string assemble(const ParsedDocument& document);

// Deterministic serializations of pipeline results (stable key order).
std::string parsed_page_to_json(const ParsedPage& page);

}  // namespace docparse
