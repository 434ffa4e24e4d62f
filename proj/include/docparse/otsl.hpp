#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace docparse {

// Six-token table-structure language: a full cell, an empty cell, three
// merge continuations (left, up, left+up cross), and a row terminator.
enum class OtslTag { FCel, ECel, LCel, UCel, XCel, Nl };

struct OtslToken {
  OtslTag tag;
  std::string content;  // meaningful only for FCel

  bool operator==(const OtslToken& other) const {
    return tag == other.tag && content == other.content;
  }
};

struct OtslDiagnostic {
  size_t offset = 0;
  std::string reason;
};

struct OtslTokenizeResult {
  std::vector<OtslToken> tokens;
  std::vector<OtslDiagnostic> diagnostics;
};

// Greedy left-to-right scan. Text after <fcel> up to the next known tag is
// that cell's content (surrounding whitespace trimmed, interior preserved
// verbatim; it may hold inline markup such as LaTeX). Unknown tag-like
// sequences become literal cell text with a diagnostic; non-whitespace text
// anywhere else is dropped with a diagnostic. Never throws.
OtslTokenizeResult tokenize_otsl(const std::string& text);

enum class OtslErrorKind {
  MissingRowTerminator,
  RaggedRows,
  IllegalMerge,
  OverlappingSpans,
  NonRectangularTable,
  BadHtml,
};

class OtslError : public std::runtime_error {
 public:
  OtslError(OtslErrorKind kind, const std::string& message, int row = -1,
            int col = -1)
      : std::runtime_error(message), kind_(kind), row_(row), col_(col) {}

  OtslErrorKind kind() const { return kind_; }
  int row() const { return row_; }
  int col() const { return col_; }

 private:
  OtslErrorKind kind_;
  int row_;
  int col_;
};

const char* otsl_error_kind_name(OtslErrorKind kind);

// One merged cell: origin slot plus the rectangle it covers.
struct CellSpan {
  int row = 0;
  int col = 0;
  int row_span = 1;
  int col_span = 1;
  std::string text;
  bool empty_origin = false;  // declared <ecel> (vs <fcel> with text)

  bool operator==(const CellSpan& other) const {
    return row == other.row && col == other.col && row_span == other.row_span &&
           col_span == other.col_span && text == other.text &&
           empty_origin == other.empty_origin;
  }
};

// Rectangular cell matrix where every slot belongs to exactly one span.
class OtslGrid {
 public:
  OtslGrid() = default;

  // Builds from explicit spans; throws OtslError when the spans do not
  // tile the rows×cols matrix exactly.
  static OtslGrid from_spans(int rows, int cols, std::vector<CellSpan> spans);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  // Spans in reading order of their origins.
  const std::vector<CellSpan>& spans() const { return spans_; }

  int span_index_at(int row, int col) const;
  const CellSpan& span_at(int row, int col) const {
    return spans_[span_index_at(row, col)];
  }

  bool operator==(const OtslGrid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           spans_ == other.spans_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<CellSpan> spans_;
  std::vector<int> owner_;  // rows_*cols_ slot -> span index
};

// Rows split on Nl; the token list must end with Nl (or be empty). Merge
// continuations must resolve to solid rectangles anchored at their origin.
// Throws OtslError naming the offending (row, col).
OtslGrid build_grid(const std::vector<OtslToken>& tokens);

// Canonical serialization; build_grid(tokenize_otsl(...)) inverts it.
// One row per line.
std::string grid_to_otsl(const OtslGrid& grid);

// Compact <table><tr><td ...> emission; colspan/rowspan attributes only
// when > 1, continuation slots emit nothing, text HTML-escaped.
std::string grid_to_html(const OtslGrid& grid);

// Ingests the table/tr/td(/th) subset; th and thead/tbody wrappers are
// normalized away; a td whose text is empty after trimming ingests as an
// empty-cell origin. Throws OtslError.
OtslGrid html_to_grid(const std::string& html);

// Total wrapper for model output: tokenize + build, collecting problems
// instead of throwing.
struct OtslParseOutcome {
  bool ok = false;
  OtslGrid grid;
  std::string error;  // set when !ok
  std::vector<OtslDiagnostic> diagnostics;
};

OtslParseOutcome try_parse_otsl(const std::string& text);

// Structural size measures used by the compression comparison: every OTSL
// token counts; HTML counts table/tr/td open+close tags.
int count_structural_tokens(const std::vector<OtslToken>& tokens);
int count_html_structural_tags(const std::string& html);

std::string html_escape_text(const std::string& text);

}  // namespace docparse
