// Independent reference implementations used only to cross-check the
// production code. Deliberately naive: per-pixel counting, exhaustive
// search, memoized recursion.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "docparse/geometry.hpp"
#include "docparse/table_tree.hpp"

namespace oracle {

// Per-pixel coverage-count IoU over an explicit W x H grid.
double page_iou(const std::vector<docparse::BBox>& pred,
                const std::vector<docparse::BBox>& gt, int width, int height);

// Exact forest edit distance by memoized recursion over forest slices.
// Same cost model as the production metric: unit insert/delete, unit
// rename on label or span mismatch, else normalized character edit
// distance of the cell text (zero when structure_only).
double tree_edit_distance(const docparse::TableNode& a,
                          const docparse::TableNode& b, bool structure_only);

// Best legal square rescale found by scanning every candidate patch count.
// Returns the side in pixels, or 0 if no candidate fits the budget.
int best_square_side(int side, int patch, int min_tokens, int max_tokens);

// Recursive guillotine split of [0,w)x[0,h) into an exact tiling.
std::vector<docparse::BBox> guillotine_partition(std::mt19937_64& rng, int width,
                                                 int height, int max_boxes);

}  // namespace oracle
