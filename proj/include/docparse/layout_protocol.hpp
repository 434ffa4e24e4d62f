#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "docparse/layout.hpp"

namespace docparse {

// One rejected or suspicious record; the parse as a whole never fails.
struct ProtocolDiagnostic {
  size_t offset = 0;  // byte offset of the offending record's anchor
  std::string reason;
};

struct LayoutParseResult {
  std::vector<LayoutElement> elements;  // reading order == record position
  std::vector<ProtocolDiagnostic> diagnostics;
  bool empty_stream = false;  // no record anchor found at all
};

// Total parser for the Stage-I detection stream. Records look like
//   <|box_start|>x1 y1 x2 y2<|box_end|><|ref_start|>label<|ref_end|><|rotate_up|>
// and may be newline-separated or directly concatenated; the parser scans
// for <|box_start|> anchors, so stray bytes between records are ignored.
// Malformed records are skipped with a diagnostic and parsing continues.
LayoutParseResult parse_layout_tokens(const std::string& stream);

// Inverse of the parser: parse_layout_tokens(serialize...(e)).elements == e
// whenever e is valid (ascending 0-based orders, labels free of token
// markers). One record per line.
std::string serialize_layout_tokens(const std::vector<LayoutElement>& elements);
std::string serialize_layout_record(const LayoutElement& element);

}  // namespace docparse
