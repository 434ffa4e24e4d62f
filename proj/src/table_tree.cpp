#include "docparse/table_tree.hpp"

namespace docparse {

int tree_size(const TableNode& node) {
  int n = 1;
  for (const TableNode& c : node.children) n += tree_size(c);
  return n;
}

TableNode tree_from_grid(const OtslGrid& grid) {
  TableNode root;
  root.label = "table";
  for (int r = 0; r < grid.rows(); ++r) {
    TableNode row;
    row.label = "tr";
    for (int c = 0; c < grid.cols(); ++c) {
      const CellSpan& s = grid.span_at(r, c);
      if (s.row != r || s.col != c) continue;
      TableNode td;
      td.label = "td";
      td.colspan = s.col_span;
      td.rowspan = s.row_span;
      td.text = s.text;
      row.children.push_back(std::move(td));
    }
    root.children.push_back(std::move(row));
  }
  return root;
}

TableNode tree_from_html(const std::string& html) {
  return tree_from_grid(html_to_grid(html));
}

TableNode make_td(const std::string& text, int colspan, int rowspan) {
  TableNode td;
  td.label = "td";
  td.text = text;
  td.colspan = colspan;
  td.rowspan = rowspan;
  return td;
}

}  // namespace docparse
