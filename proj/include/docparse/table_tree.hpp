#pragma once

#include <string>
#include <vector>

#include "docparse/otsl.hpp"

namespace docparse {

// Ordered labeled tree operand for the tree-similarity metric. Labels are
// "table", "tr", "td"; span attributes and text are meaningful on td.
struct TableNode {
  std::string label;
  int colspan = 1;
  int rowspan = 1;
  std::string text;
  std::vector<TableNode> children;

  bool operator==(const TableNode& other) const {
    return label == other.label && colspan == other.colspan &&
           rowspan == other.rowspan && text == other.text &&
           children == other.children;
  }
};

int tree_size(const TableNode& node);

TableNode tree_from_grid(const OtslGrid& grid);
TableNode tree_from_html(const std::string& html);  // via html_to_grid

TableNode make_td(const std::string& text, int colspan = 1, int rowspan = 1);

}  // namespace docparse
