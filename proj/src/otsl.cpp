#include "docparse/otsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace docparse {

namespace {

struct TagSpec {
  const char* text;
  OtslTag tag;
};

constexpr TagSpec kTags[] = {
    {"<fcel>", OtslTag::FCel}, {"<ecel>", OtslTag::ECel},
    {"<lcel>", OtslTag::LCel}, {"<ucel>", OtslTag::UCel},
    {"<xcel>", OtslTag::XCel}, {"<nl>", OtslTag::Nl},
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && is_space(s[a])) ++a;
  while (b > a && is_space(s[b - 1])) --b;
  return s.substr(a, b - a);
}

// Matches a known tag at pos; returns its index in kTags or -1.
int match_tag(const std::string& s, size_t pos) {
  for (int i = 0; i < static_cast<int>(std::size(kTags)); ++i) {
    size_t n = std::char_traits<char>::length(kTags[i].text);
    if (s.compare(pos, n, kTags[i].text) == 0) return i;
  }
  return -1;
}

// A short alphabetic "<word>" sequence that is not one of ours.
bool looks_like_tag(const std::string& s, size_t pos, size_t& len) {
  if (s[pos] != '<') return false;
  size_t i = pos + 1;
  while (i < s.size() && i - pos <= 12 &&
         (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
          s[i] == '/')) {
    ++i;
  }
  if (i < s.size() && s[i] == '>' && i > pos + 1) {
    len = i - pos + 1;
    return true;
  }
  return false;
}

}  // namespace

OtslTokenizeResult tokenize_otsl(const std::string& text) {
  OtslTokenizeResult result;
  size_t pos = 0;
  bool in_cell = false;          // capturing content of the last FCel
  std::string cell;
  size_t stray_start = std::string::npos;
  std::string stray;

  auto flush_cell = [&] {
    if (in_cell) {
      result.tokens.back().content = trim(cell);
      cell.clear();
      in_cell = false;
    }
  };
  auto flush_stray = [&] {
    if (stray_start != std::string::npos) {
      if (!trim(stray).empty()) {
        result.diagnostics.push_back(
            {stray_start, "stray text outside any cell: '" + trim(stray) +
                              "' dropped"});
      }
      stray.clear();
      stray_start = std::string::npos;
    }
  };

  while (pos < text.size()) {
    int tag_idx = text[pos] == '<' ? match_tag(text, pos) : -1;
    if (tag_idx >= 0) {
      flush_cell();
      flush_stray();
      OtslTag tag = kTags[tag_idx].tag;
      result.tokens.push_back({tag, ""});
      if (tag == OtslTag::FCel) {
        in_cell = true;
        cell.clear();
      }
      pos += std::char_traits<char>::length(kTags[tag_idx].text);
      continue;
    }
    size_t tag_len = 0;
    if (text[pos] == '<' && looks_like_tag(text, pos, tag_len)) {
      result.diagnostics.push_back(
          {pos, "unknown tag '" + text.substr(pos, tag_len) +
                    "' treated as literal text"});
      if (in_cell) {
        cell.append(text, pos, tag_len);
      } else {
        if (stray_start == std::string::npos) stray_start = pos;
        stray.append(text, pos, tag_len);
      }
      pos += tag_len;
      continue;
    }
    if (in_cell) {
      cell.push_back(text[pos]);
    } else {
      if (stray_start == std::string::npos && !is_space(text[pos])) {
        stray_start = pos;
      }
      if (stray_start != std::string::npos) stray.push_back(text[pos]);
    }
    ++pos;
  }
  flush_cell();
  flush_stray();
  return result;
}

const char* otsl_error_kind_name(OtslErrorKind kind) {
  switch (kind) {
    case OtslErrorKind::MissingRowTerminator:
      return "MissingRowTerminator";
    case OtslErrorKind::RaggedRows:
      return "RaggedRows";
    case OtslErrorKind::IllegalMerge:
      return "IllegalMerge";
    case OtslErrorKind::OverlappingSpans:
      return "OverlappingSpans";
    case OtslErrorKind::NonRectangularTable:
      return "NonRectangularTable";
    case OtslErrorKind::BadHtml:
      return "BadHtml";
  }
  return "unknown";
}

namespace {

std::string at(int row, int col) {
  return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
}

}  // namespace

OtslGrid OtslGrid::from_spans(int rows, int cols, std::vector<CellSpan> spans) {
  if (rows < 0 || cols < 0) {
    throw OtslError(OtslErrorKind::NonRectangularTable,
                    "negative grid dimensions");
  }
  OtslGrid g;
  g.rows_ = rows;
  g.cols_ = cols;
  g.owner_.assign(static_cast<size_t>(rows) * cols, -1);
  std::sort(spans.begin(), spans.end(), [](const CellSpan& a, const CellSpan& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (size_t i = 0; i < spans.size(); ++i) {
    const CellSpan& s = spans[i];
    if (s.row < 0 || s.col < 0 || s.row_span < 1 || s.col_span < 1 ||
        s.row + s.row_span > rows || s.col + s.col_span > cols) {
      throw OtslError(OtslErrorKind::NonRectangularTable,
                      "span out of bounds at " + at(s.row, s.col), s.row,
                      s.col);
    }
    for (int r = s.row; r < s.row + s.row_span; ++r) {
      for (int c = s.col; c < s.col + s.col_span; ++c) {
        int& slot = g.owner_[static_cast<size_t>(r) * cols + c];
        if (slot != -1) {
          throw OtslError(OtslErrorKind::OverlappingSpans,
                          "spans overlap at " + at(r, c), r, c);
        }
        slot = static_cast<int>(i);
      }
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (g.owner_[static_cast<size_t>(r) * cols + c] == -1) {
        throw OtslError(OtslErrorKind::NonRectangularTable,
                        "uncovered slot at " + at(r, c), r, c);
      }
    }
  }
  g.spans_ = std::move(spans);
  return g;
}

int OtslGrid::span_index_at(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw std::out_of_range("OtslGrid: slot out of range");
  }
  return owner_[static_cast<size_t>(row) * cols_ + col];
}

OtslGrid build_grid(const std::vector<OtslToken>& tokens) {
  if (tokens.empty()) return OtslGrid();
  if (tokens.back().tag != OtslTag::Nl) {
    throw OtslError(OtslErrorKind::MissingRowTerminator,
                    "token stream does not end with a row terminator");
  }

  std::vector<std::vector<const OtslToken*>> rows;
  rows.emplace_back();
  for (const OtslToken& t : tokens) {
    if (t.tag == OtslTag::Nl) {
      rows.emplace_back();
    } else {
      rows.back().push_back(&t);
    }
  }
  rows.pop_back();  // the slot opened by the final Nl

  int nrows = static_cast<int>(rows.size());
  int ncols = static_cast<int>(rows[0].size());
  for (int r = 1; r < nrows; ++r) {
    if (static_cast<int>(rows[r].size()) != ncols) {
      throw OtslError(OtslErrorKind::RaggedRows,
                      "row " + std::to_string(r) + " has " +
                          std::to_string(rows[r].size()) + " cells, expected " +
                          std::to_string(ncols),
                      r, static_cast<int>(rows[r].size()));
    }
  }

  // Assign every slot to a span origin, then verify spans are solid
  // rectangles anchored at their origin.
  std::vector<int> owner(static_cast<size_t>(nrows) * ncols, -1);
  auto slot = [&](int r, int c) -> int& {
    return owner[static_cast<size_t>(r) * ncols + c];
  };
  std::vector<CellSpan> spans;
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      const OtslToken& t = *rows[r][c];
      switch (t.tag) {
        case OtslTag::FCel:
        case OtslTag::ECel: {
          CellSpan s;
          s.row = r;
          s.col = c;
          s.text = t.content;
          s.empty_origin = t.tag == OtslTag::ECel;
          slot(r, c) = static_cast<int>(spans.size());
          spans.push_back(std::move(s));
          break;
        }
        case OtslTag::LCel:
          if (c == 0) {
            throw OtslError(OtslErrorKind::IllegalMerge,
                            "merge-left in the first column at " + at(r, c), r,
                            c);
          }
          slot(r, c) = slot(r, c - 1);
          break;
        case OtslTag::UCel:
          if (r == 0) {
            throw OtslError(OtslErrorKind::IllegalMerge,
                            "merge-up in the first row at " + at(r, c), r, c);
          }
          slot(r, c) = slot(r - 1, c);
          break;
        case OtslTag::XCel: {
          if (r == 0 || c == 0) {
            throw OtslError(OtslErrorKind::IllegalMerge,
                            "cross merge on the table edge at " + at(r, c), r,
                            c);
          }
          if (slot(r, c - 1) != slot(r - 1, c)) {
            throw OtslError(
                OtslErrorKind::IllegalMerge,
                "cross merge joins two different spans at " + at(r, c), r, c);
          }
          slot(r, c) = slot(r, c - 1);
          break;
        }
        case OtslTag::Nl:
          throw std::logic_error("build_grid: Nl inside a row");
      }
    }
  }

  struct Extent {
    int min_r = 1 << 30, min_c = 1 << 30, max_r = -1, max_c = -1, count = 0;
  };
  std::vector<Extent> extents(spans.size());
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      Extent& e = extents[slot(r, c)];
      e.min_r = std::min(e.min_r, r);
      e.min_c = std::min(e.min_c, c);
      e.max_r = std::max(e.max_r, r);
      e.max_c = std::max(e.max_c, c);
      ++e.count;
    }
  }
  for (size_t i = 0; i < spans.size(); ++i) {
    const Extent& e = extents[i];
    CellSpan& s = spans[i];
    int area = (e.max_r - e.min_r + 1) * (e.max_c - e.min_c + 1);
    if (e.count != area || e.min_r != s.row || e.min_c != s.col) {
      throw OtslError(OtslErrorKind::IllegalMerge,
                      "merged region anchored at " + at(s.row, s.col) +
                          " is not a solid rectangle",
                      s.row, s.col);
    }
    s.row_span = e.max_r - e.min_r + 1;
    s.col_span = e.max_c - e.min_c + 1;
  }
  return OtslGrid::from_spans(nrows, ncols, std::move(spans));
}

std::string grid_to_otsl(const OtslGrid& grid) {
  std::ostringstream out;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const CellSpan& s = grid.span_at(r, c);
      if (r == s.row && c == s.col) {
        if (s.empty_origin) {
          out << "<ecel>";
        } else {
          out << "<fcel>" << s.text;
        }
      } else if (r == s.row) {
        out << "<lcel>";
      } else if (c == s.col) {
        out << "<ucel>";
      } else {
        out << "<xcel>";
      }
    }
    out << "<nl>\n";
  }
  return out.str();
}

std::string html_escape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string grid_to_html(const OtslGrid& grid) {
  std::ostringstream out;
  out << "<table>";
  for (int r = 0; r < grid.rows(); ++r) {
    out << "<tr>";
    for (int c = 0; c < grid.cols(); ++c) {
      const CellSpan& s = grid.span_at(r, c);
      if (r != s.row || c != s.col) continue;
      out << "<td";
      if (s.col_span > 1) out << " colspan=\"" << s.col_span << "\"";
      if (s.row_span > 1) out << " rowspan=\"" << s.row_span << "\"";
      out << ">" << html_escape_text(s.text) << "</td>";
    }
    out << "</tr>";
  }
  out << "</table>";
  return out.str();
}

namespace {

std::string html_unescape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '&') {
      out.push_back(text[pos++]);
      continue;
    }
    size_t semi = text.find(';', pos);
    if (semi == std::string::npos || semi - pos > 8) {
      out.push_back(text[pos++]);
      continue;
    }
    std::string entity = text.substr(pos + 1, semi - pos - 1);
    if (entity == "amp") {
      out.push_back('&');
    } else if (entity == "lt") {
      out.push_back('<');
    } else if (entity == "gt") {
      out.push_back('>');
    } else if (entity == "quot") {
      out.push_back('"');
    } else if (entity == "apos" || entity == "#39") {
      out.push_back('\'');
    } else {
      out.append(text, pos, semi - pos + 1);
    }
    pos = semi + 1;
  }
  return out;
}

struct HtmlTag {
  std::string name;       // lowercased, without slashes
  bool closing = false;
  int colspan = 1;
  int rowspan = 1;
  size_t end = 0;         // index just past '>'
};

bool parse_tag(const std::string& html, size_t pos, HtmlTag& tag) {
  if (pos >= html.size() || html[pos] != '<') return false;
  size_t close = html.find('>', pos);
  if (close == std::string::npos) return false;
  std::string inner = html.substr(pos + 1, close - pos - 1);
  tag.end = close + 1;
  tag.closing = !inner.empty() && inner[0] == '/';
  size_t i = tag.closing ? 1 : 0;
  size_t name_start = i;
  while (i < inner.size() &&
         std::isalnum(static_cast<unsigned char>(inner[i]))) {
    ++i;
  }
  tag.name = inner.substr(name_start, i - name_start);
  std::transform(tag.name.begin(), tag.name.end(), tag.name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  tag.colspan = 1;
  tag.rowspan = 1;
  // Attribute scan: only colspan/rowspan matter, values quoted or bare.
  while (i < inner.size()) {
    while (i < inner.size() && !std::isalpha(static_cast<unsigned char>(inner[i]))) ++i;
    size_t key_start = i;
    while (i < inner.size() &&
           std::isalnum(static_cast<unsigned char>(inner[i]))) {
      ++i;
    }
    std::string key = inner.substr(key_start, i - key_start);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    while (i < inner.size() && is_space(inner[i])) ++i;
    if (i >= inner.size() || inner[i] != '=') continue;
    ++i;
    while (i < inner.size() && is_space(inner[i])) ++i;
    std::string value;
    if (i < inner.size() && (inner[i] == '"' || inner[i] == '\'')) {
      char q = inner[i++];
      size_t vstart = i;
      while (i < inner.size() && inner[i] != q) ++i;
      value = inner.substr(vstart, i - vstart);
      if (i < inner.size()) ++i;
    } else {
      size_t vstart = i;
      while (i < inner.size() && !is_space(inner[i])) ++i;
      value = inner.substr(vstart, i - vstart);
    }
    int parsed = 0;
    try {
      parsed = std::stoi(value);
    } catch (const std::exception&) {
      parsed = 0;
    }
    if (parsed >= 1) {
      if (key == "colspan") tag.colspan = parsed;
      if (key == "rowspan") tag.rowspan = parsed;
    }
  }
  return true;
}

}  // namespace

OtslGrid html_to_grid(const std::string& html) {
  struct PendingCell {
    int row, col, colspan, rowspan;
    std::string text;
  };
  std::vector<PendingCell> cells;
  // occupancy[r][c] = true once any span covers the slot.
  std::vector<std::vector<bool>> taken;

  size_t pos = 0;
  int row = -1;
  bool in_table = false;
  bool done = false;
  int max_col = 0;

  auto ensure_row = [&](int r) {
    while (static_cast<int>(taken.size()) <= r) taken.emplace_back();
  };
  auto slot_taken = [&](int r, int c) {
    ensure_row(r);
    auto& rowv = taken[r];
    if (static_cast<int>(rowv.size()) <= c) rowv.resize(c + 1, false);
    return rowv[c] ? true : false;
  };
  auto occupy = [&](int r, int c) {
    ensure_row(r);
    auto& rowv = taken[r];
    if (static_cast<int>(rowv.size()) <= c) rowv.resize(c + 1, false);
    rowv[c] = true;
  };

  while (pos < html.size() && !done) {
    if (html[pos] != '<') {
      if (!is_space(html[pos])) {
        throw OtslError(OtslErrorKind::BadHtml,
                        "unexpected text between table tags");
      }
      ++pos;
      continue;
    }
    HtmlTag tag;
    if (!parse_tag(html, pos, tag)) {
      throw OtslError(OtslErrorKind::BadHtml, "unterminated tag");
    }
    pos = tag.end;
    if (tag.name == "thead" || tag.name == "tbody") continue;
    if (tag.name == "table") {
      if (tag.closing) {
        done = true;
      } else {
        in_table = true;
      }
      continue;
    }
    if (!in_table) {
      throw OtslError(OtslErrorKind::BadHtml,
                      "expected <table> before '" + tag.name + "'");
    }
    if (tag.name == "tr") {
      if (!tag.closing) ++row;
      continue;
    }
    if (tag.name == "td" || tag.name == "th") {
      if (tag.closing) continue;
      if (row < 0) {
        throw OtslError(OtslErrorKind::BadHtml, "cell outside any row");
      }
      size_t text_end = pos;
      std::string text;
      // Capture raw text until the matching close tag (or the next
      // structural tag when the close tag is omitted).
      while (text_end < html.size()) {
        if (html[text_end] == '<') {
          HtmlTag peek;
          if (parse_tag(html, text_end, peek) &&
              (peek.name == "td" || peek.name == "th" || peek.name == "tr" ||
               peek.name == "table")) {
            break;
          }
        }
        text.push_back(html[text_end]);
        ++text_end;
      }
      pos = text_end;
      PendingCell cell;
      cell.row = row;
      cell.colspan = tag.colspan;
      cell.rowspan = tag.rowspan;
      cell.text = trim(html_unescape_text(text));
      int c = 0;
      while (slot_taken(row, c)) ++c;
      cell.col = c;
      for (int r = row; r < row + cell.rowspan; ++r) {
        for (int cc = cell.col; cc < cell.col + cell.colspan; ++cc) {
          if (slot_taken(r, cc)) {
            throw OtslError(OtslErrorKind::OverlappingSpans,
                            "spans overlap at " + at(r, cc), r, cc);
          }
          occupy(r, cc);
        }
      }
      max_col = std::max(max_col, cell.col + cell.colspan);
      cells.push_back(std::move(cell));
      continue;
    }
    // Unknown tags (formatting etc.) are not part of the contract.
    throw OtslError(OtslErrorKind::BadHtml,
                    "unsupported tag '" + tag.name + "'");
  }

  int nrows = row + 1;
  if (nrows <= 0) return OtslGrid();
  if (static_cast<int>(taken.size()) > nrows) {
    const PendingCell* bad = nullptr;
    for (const auto& cell : cells) {
      if (cell.row + cell.rowspan > nrows) bad = &cell;
    }
    throw OtslError(OtslErrorKind::NonRectangularTable,
                    "rowspan extends past the last row",
                    bad ? bad->row : nrows, bad ? bad->col : 0);
  }
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < max_col; ++c) {
      if (!slot_taken(r, c)) {
        throw OtslError(OtslErrorKind::NonRectangularTable,
                        "uncovered slot at " + at(r, c), r, c);
      }
    }
  }

  std::vector<CellSpan> spans;
  spans.reserve(cells.size());
  for (const auto& cell : cells) {
    CellSpan s;
    s.row = cell.row;
    s.col = cell.col;
    s.row_span = cell.rowspan;
    s.col_span = cell.colspan;
    s.text = cell.text;
    s.empty_origin = cell.text.empty();
    spans.push_back(std::move(s));
  }
  return OtslGrid::from_spans(nrows, max_col, std::move(spans));
}

OtslParseOutcome try_parse_otsl(const std::string& text) {
  OtslParseOutcome outcome;
  OtslTokenizeResult tok = tokenize_otsl(text);
  outcome.diagnostics = std::move(tok.diagnostics);
  try {
    outcome.grid = build_grid(tok.tokens);
    outcome.ok = true;
  } catch (const OtslError& err) {
    outcome.error = std::string(otsl_error_kind_name(err.kind())) + ": " +
                    err.what();
  }
  return outcome;
}

int count_structural_tokens(const std::vector<OtslToken>& tokens) {
  return static_cast<int>(tokens.size());
}

int count_html_structural_tags(const std::string& html) {
  int count = 0;
  size_t pos = 0;
  while (pos < html.size()) {
    if (html[pos] == '<') {
      HtmlTag tag;
      if (parse_tag(html, pos, tag) &&
          (tag.name == "table" || tag.name == "tr" || tag.name == "td" ||
           tag.name == "th")) {
        ++count;
        pos = tag.end;
        continue;
      }
    }
    ++pos;
  }
  return count;
}

}  // namespace docparse
