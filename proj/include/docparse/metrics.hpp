#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "docparse/geometry.hpp"
#include "docparse/table_tree.hpp"

namespace docparse {

struct PageIouResult {
  double value = 0.0;
  bool zero_denominator = false;  // exactly one side contributed coverage
};

// Page-level coverage agreement: sum over pixels of min(pred coverage,
// gt coverage) divided by sum of max. The evaluation region is the whole
// raster; box parts outside it are ignored. Both sides empty → 1.0; exactly
// one side empty → 0.0 with the zero_denominator flag.
PageIouResult page_iou_detail(const std::vector<BBox>& pred,
                              const std::vector<BBox>& gt, int raster_width,
                              int raster_height);
double page_iou(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                int raster_width, int raster_height);

double box_iou(const BBox& a, const BBox& b);

// Fraction of gt boxes matched greedily (descending IoU, each box used at
// most once) to a prediction with IoU >= threshold. Empty gt → 1.0.
double recall_at_iou(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                     double threshold = 0.5);

// Exact optimal tree edit distance (unit insert/delete; substitution 1 on
// label or span-attribute mismatch, else the normalized character edit
// distance of the texts; structure_only ignores text entirely).
double tree_edit_distance(const TableNode& a, const TableNode& b,
                          bool structure_only = false);

// 1 − tree_edit_distance / max(size(a), size(b)).
double teds(const TableNode& a, const TableNode& b,
            bool structure_only = false);

// Levenshtein over Unicode code points (invalid UTF-8 bytes count as one
// code point each).
size_t levenshtein(const std::string& a, const std::string& b);
size_t levenshtein_tokens(const std::vector<std::string>& a,
                          const std::vector<std::string>& b);

// levenshtein / max(length); 0.0 when both are empty. Lower is better.
double norm_edit_distance(const std::string& a, const std::string& b);

// LaTeX-aware token split: \word commands are single tokens, any other
// non-space character (one code point) is a token, whitespace separates.
std::vector<std::string> latex_tokenize(const std::string& text);

// 1 − normalized token-level edit distance between the two tokenizations.
// A stand-in scorer: callers may plug any scorer with the same signature.
double formula_consistency(const std::string& a, const std::string& b);

using FormulaScorer = std::function<double(const std::string&, const std::string&)>;

// ((1 − text_edit) × 100 + table_teds + formula_score) / 3.
// text_edit ∈ [0,1], the others ∈ [0,100]; violations throw out_of_range.
double overall_score(double text_edit, double table_teds, double formula_score);

}  // namespace docparse
