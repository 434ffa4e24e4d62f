#include "docparse/layout_protocol.hpp"

#include <cctype>
#include <sstream>

namespace docparse {

namespace {

constexpr const char* kBoxStart = "<|box_start|>";
constexpr const char* kBoxEnd = "<|box_end|>";
constexpr const char* kRefStart = "<|ref_start|>";
constexpr const char* kRefEnd = "<|ref_end|>";

void skip_spaces(const std::string& s, size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
    ++pos;
  }
}

bool parse_nonneg_int(const std::string& s, size_t& pos, int& out) {
  skip_spaces(s, pos);
  size_t start = pos;
  long long v = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    v = v * 10 + (s[pos] - '0');
    if (v > 1'000'000'000LL) return false;  // absurd coordinate
    ++pos;
  }
  if (pos == start) return false;
  out = static_cast<int>(v);
  return true;
}

bool match_literal(const std::string& s, size_t& pos, const char* lit,
                   bool allow_leading_space) {
  if (allow_leading_space) skip_spaces(s, pos);
  size_t n = std::char_traits<char>::length(lit);
  if (s.compare(pos, n, lit) != 0) return false;
  pos += n;
  return true;
}

}  // namespace

LayoutParseResult parse_layout_tokens(const std::string& stream) {
  LayoutParseResult result;
  size_t search_from = 0;
  const size_t anchor_len = std::char_traits<char>::length(kBoxStart);

  while (true) {
    size_t anchor = stream.find(kBoxStart, search_from);
    if (anchor == std::string::npos) break;

    size_t pos = anchor + anchor_len;
    auto reject = [&](const std::string& reason, size_t resume) {
      result.diagnostics.push_back({anchor, reason});
      search_from = std::max(resume, anchor + 1);
    };

    int coords[4];
    bool ok = true;
    for (int& c : coords) {
      if (!parse_nonneg_int(stream, pos, c)) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      reject("expected four non-negative integer coordinates", pos);
      continue;
    }
    if (!match_literal(stream, pos, kBoxEnd, true)) {
      reject("missing box terminator after coordinates", pos);
      continue;
    }
    if (!match_literal(stream, pos, kRefStart, true)) {
      reject("missing label segment after box", pos);
      continue;
    }
    size_t ref_end = stream.find(kRefEnd, pos);
    size_t next_anchor = stream.find(kBoxStart, pos);
    if (ref_end == std::string::npos ||
        (next_anchor != std::string::npos && next_anchor < ref_end)) {
      // Unterminated label; resume at the next record rather than
      // swallowing it into this one.
      reject("unterminated label segment", pos);
      continue;
    }
    std::string label = stream.substr(pos, ref_end - pos);
    pos = ref_end + std::char_traits<char>::length(kRefEnd);

    skip_spaces(stream, pos);
    Rotation rotation;
    if (match_literal(stream, pos, "<|rotate_up|>", false)) {
      rotation = Rotation::Up;
    } else if (match_literal(stream, pos, "<|rotate_down|>", false)) {
      rotation = Rotation::Down;
    } else if (match_literal(stream, pos, "<|rotate_left|>", false)) {
      rotation = Rotation::Left;
    } else if (match_literal(stream, pos, "<|rotate_right|>", false)) {
      rotation = Rotation::Right;
    } else {
      reject("missing or unknown rotation tag", pos);
      continue;
    }

    if (coords[0] >= coords[2] || coords[1] >= coords[3]) {
      reject("coordinates out of order (x1>=x2 or y1>=y2)", pos);
      continue;
    }

    LayoutElement e;
    e.bbox = BBox{coords[0], coords[1], coords[2], coords[3],
                  CoordSpace::Thumbnail};
    e.category = category_from_name(label);
    if (e.category == LayoutCategory::Unknown) e.custom_label = label;
    e.rotation = rotation;
    e.order = static_cast<int>(result.elements.size());
    result.elements.push_back(std::move(e));
    search_from = pos;
  }

  result.empty_stream = result.elements.empty() && result.diagnostics.empty();
  return result;
}

std::string serialize_layout_record(const LayoutElement& element) {
  std::ostringstream out;
  const std::string& label =
      element.category == LayoutCategory::Unknown && !element.custom_label.empty()
          ? element.custom_label
          : category_name(element.category);
  out << kBoxStart << element.bbox.x1 << ' ' << element.bbox.y1 << ' '
      << element.bbox.x2 << ' ' << element.bbox.y2 << kBoxEnd << kRefStart
      << label << kRefEnd << "<|rotate_" << rotation_name(element.rotation)
      << "|>";
  return out.str();
}

std::string serialize_layout_tokens(
    const std::vector<LayoutElement>& elements) {
  std::ostringstream out;
  for (size_t i = 0; i < elements.size(); ++i) {
    if (i) out << '\n';
    out << serialize_layout_record(elements[i]);
  }
  return out.str();
}

}  // namespace docparse
