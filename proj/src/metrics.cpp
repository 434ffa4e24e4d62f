#include "docparse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace docparse {

namespace {

std::vector<int64_t> coverage_map(const std::vector<BBox>& boxes, int width,
                                  int height, int64_t& total) {
  // 2D difference array, then prefix sums.
  std::vector<int64_t> diff(static_cast<size_t>(width + 1) * (height + 1), 0);
  auto d = [&](int x, int y) -> int64_t& {
    return diff[static_cast<size_t>(y) * (width + 1) + x];
  };
  for (const BBox& box : boxes) {
    int x1 = std::clamp(box.x1, 0, width);
    int x2 = std::clamp(box.x2, 0, width);
    int y1 = std::clamp(box.y1, 0, height);
    int y2 = std::clamp(box.y2, 0, height);
    if (x1 >= x2 || y1 >= y2) continue;
    d(x1, y1) += 1;
    d(x2, y1) -= 1;
    d(x1, y2) -= 1;
    d(x2, y2) += 1;
  }
  std::vector<int64_t> cov(static_cast<size_t>(width) * height, 0);
  total = 0;
  for (int y = 0; y < height; ++y) {
    int64_t run = 0;
    for (int x = 0; x < width; ++x) {
      run += d(x, y);
      int64_t above =
          y > 0 ? cov[static_cast<size_t>(y - 1) * width + x] : 0;
      // cov so far holds the column-cumulative value; finish the 2D prefix.
      int64_t v = run + above;
      cov[static_cast<size_t>(y) * width + x] = v;
      total += v;
    }
  }
  return cov;
}

}  // namespace

PageIouResult page_iou_detail(const std::vector<BBox>& pred,
                              const std::vector<BBox>& gt, int raster_width,
                              int raster_height) {
  if (raster_width <= 0 || raster_height <= 0) {
    throw std::invalid_argument("page_iou: non-positive raster");
  }
  int64_t pred_total = 0;
  int64_t gt_total = 0;
  std::vector<int64_t> p = coverage_map(pred, raster_width, raster_height,
                                        pred_total);
  std::vector<int64_t> g = coverage_map(gt, raster_width, raster_height,
                                        gt_total);
  PageIouResult result;
  if (pred_total == 0 && gt_total == 0) {
    result.value = 1.0;
    return result;
  }
  if (pred_total == 0 || gt_total == 0) {
    result.value = 0.0;
    result.zero_denominator = true;
    return result;
  }
  int64_t num = 0;
  int64_t den = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    num += std::min(p[i], g[i]);
    den += std::max(p[i], g[i]);
  }
  result.value = static_cast<double>(num) / static_cast<double>(den);
  return result;
}

double page_iou(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                int raster_width, int raster_height) {
  return page_iou_detail(pred, gt, raster_width, raster_height).value;
}

double box_iou(const BBox& a, const BBox& b) {
  long long ix = std::max(
      0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  long long iy = std::max(
      0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  long long inter = ix * iy;
  long long uni = static_cast<long long>(a.area()) + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double recall_at_iou(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                     double threshold) {
  if (gt.empty()) return 1.0;
  struct Pair {
    double iou;
    size_t pi, gi;
  };
  std::vector<Pair> pairs;
  for (size_t pi = 0; pi < pred.size(); ++pi) {
    for (size_t gi = 0; gi < gt.size(); ++gi) {
      double v = box_iou(pred[pi], gt[gi]);
      if (v >= threshold) pairs.push_back({v, pi, gi});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.pi != b.pi) return a.pi < b.pi;
    return a.gi < b.gi;
  });
  std::vector<bool> pred_used(pred.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  size_t matched = 0;
  for (const Pair& p : pairs) {
    if (pred_used[p.pi] || gt_used[p.gi]) continue;
    pred_used[p.pi] = true;
    gt_used[p.gi] = true;
    ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(gt.size());
}

namespace {

std::vector<uint32_t> decode_utf8(const std::string& s) {
  std::vector<uint32_t> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    uint32_t cp = c;
    size_t extra = 0;
    if ((c & 0x80) == 0) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      out.push_back(0xDC00u + c);  // lone continuation / invalid lead
      ++i;
      continue;
    }
    bool ok = i + extra < s.size();
    if (ok) {
      for (size_t k = 1; k <= extra; ++k) {
        unsigned char cc = s[i + k];
        if ((cc & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (cc & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(0xDC00u + c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

template <typename T>
size_t levenshtein_impl(const std::vector<T>& a, const std::vector<T>& b) {
  const size_t n = a.size();
  const size_t m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<size_t> prev(m + 1);
  std::vector<size_t> cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

size_t levenshtein(const std::string& a, const std::string& b) {
  return levenshtein_impl(decode_utf8(a), decode_utf8(b));
}

size_t levenshtein_tokens(const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
  return levenshtein_impl(a, b);
}

double norm_edit_distance(const std::string& a, const std::string& b) {
  std::vector<uint32_t> da = decode_utf8(a);
  std::vector<uint32_t> db = decode_utf8(b);
  size_t denom = std::max(da.size(), db.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(levenshtein_impl(da, db)) /
         static_cast<double>(denom);
}

namespace {

// Zhang–Shasha keyroot dynamic program; exact optimal distance.
struct FlatTree {
  std::vector<const TableNode*> node;  // 1-based postorder
  std::vector<int> lml;                // leftmost leaf of subtree, 1-based
  std::vector<int> keyroots;           // ascending
};

int flatten_rec(const TableNode& n, FlatTree& f) {
  int first_leaf = -1;
  for (const TableNode& c : n.children) {
    int cl = flatten_rec(c, f);
    if (first_leaf == -1) first_leaf = cl;
  }
  f.node.push_back(&n);
  f.lml.push_back(0);
  int idx = static_cast<int>(f.node.size()) - 1;
  f.lml[idx] = n.children.empty() ? idx : first_leaf;
  return f.lml[idx];
}

FlatTree flatten(const TableNode& root) {
  FlatTree f;
  f.node.push_back(nullptr);  // 1-based
  f.lml.push_back(0);
  flatten_rec(root, f);
  std::map<int, int> last_with_lml;
  for (int i = 1; i < static_cast<int>(f.node.size()); ++i) {
    last_with_lml[f.lml[i]] = i;
  }
  for (const auto& [lml, i] : last_with_lml) f.keyroots.push_back(i);
  std::sort(f.keyroots.begin(), f.keyroots.end());
  return f;
}

double rename_cost(const TableNode* a, const TableNode* b,
                   bool structure_only) {
  if (a->label != b->label) return 1.0;
  if (a->colspan != b->colspan || a->rowspan != b->rowspan) return 1.0;
  if (structure_only) return 0.0;
  return norm_edit_distance(a->text, b->text);
}

}  // namespace

double tree_edit_distance(const TableNode& a, const TableNode& b,
                          bool structure_only) {
  FlatTree t1 = flatten(a);
  FlatTree t2 = flatten(b);
  int n1 = static_cast<int>(t1.node.size()) - 1;
  int n2 = static_cast<int>(t2.node.size()) - 1;
  std::vector<std::vector<double>> td(n1 + 1,
                                      std::vector<double>(n2 + 1, 0.0));

  for (int i : t1.keyroots) {
    for (int j : t2.keyroots) {
      int li = t1.lml[i];
      int lj = t2.lml[j];
      int m = i - li + 2;
      int n = j - lj + 2;
      std::vector<std::vector<double>> fd(m, std::vector<double>(n, 0.0));
      int ioff = li - 1;
      int joff = lj - 1;
      for (int x = 1; x < m; ++x) fd[x][0] = fd[x - 1][0] + 1.0;
      for (int y = 1; y < n; ++y) fd[0][y] = fd[0][y - 1] + 1.0;
      for (int x = 1; x < m; ++x) {
        for (int y = 1; y < n; ++y) {
          int node1 = x + ioff;
          int node2 = y + joff;
          if (t1.lml[node1] == li && t2.lml[node2] == lj) {
            double ren =
                rename_cost(t1.node[node1], t2.node[node2], structure_only);
            fd[x][y] = std::min({fd[x - 1][y] + 1.0, fd[x][y - 1] + 1.0,
                                 fd[x - 1][y - 1] + ren});
            td[node1][node2] = fd[x][y];
          } else {
            int p = t1.lml[node1] - 1 - ioff;
            int q = t2.lml[node2] - 1 - joff;
            fd[x][y] = std::min({fd[x - 1][y] + 1.0, fd[x][y - 1] + 1.0,
                                 fd[p][q] + td[node1][node2]});
          }
        }
      }
    }
  }
  return td[n1][n2];
}

double teds(const TableNode& a, const TableNode& b, bool structure_only) {
  double dist = tree_edit_distance(a, b, structure_only);
  int denom = std::max(tree_size(a), tree_size(b));
  return 1.0 - dist / static_cast<double>(denom);
}

std::vector<std::string> latex_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  auto cp_len = [&](size_t pos) -> size_t {
    unsigned char c = text[pos];
    if ((c & 0x80) == 0) return 1;
    if ((c & 0xE0) == 0xC0) return 2;
    if ((c & 0xF0) == 0xE0) return 3;
    if ((c & 0xF8) == 0xF0) return 4;
    return 1;
  };
  while (i < text.size()) {
    unsigned char c = text[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '\\' && i + 1 < text.size()) {
      unsigned char next = text[i + 1];
      if (std::isalpha(next)) {
        size_t j = i + 1;
        while (j < text.size() &&
               std::isalpha(static_cast<unsigned char>(text[j]))) {
          ++j;
        }
        tokens.push_back(text.substr(i, j - i));
        i = j;
      } else {
        size_t len = 1 + cp_len(i + 1);
        len = std::min(len, text.size() - i);
        tokens.push_back(text.substr(i, len));
        i += len;
      }
      continue;
    }
    size_t len = std::min(cp_len(i), text.size() - i);
    tokens.push_back(text.substr(i, len));
    i += len;
  }
  return tokens;
}

double formula_consistency(const std::string& a, const std::string& b) {
  std::vector<std::string> ta = latex_tokenize(a);
  std::vector<std::string> tb = latex_tokenize(b);
  size_t denom = std::max(ta.size(), tb.size());
  if (denom == 0) return 1.0;
  double dist = static_cast<double>(levenshtein_impl(ta, tb));
  return 1.0 - dist / static_cast<double>(denom);
}

double overall_score(double text_edit, double table_teds,
                     double formula_score) {
  if (!(text_edit >= 0.0 && text_edit <= 1.0)) {
    throw std::out_of_range("overall_score: text_edit outside [0,1]");
  }
  if (!(table_teds >= 0.0 && table_teds <= 100.0)) {
    throw std::out_of_range("overall_score: table score outside [0,100]");
  }
  if (!(formula_score >= 0.0 && formula_score <= 100.0)) {
    throw std::out_of_range("overall_score: formula score outside [0,100]");
  }
  return ((1.0 - text_edit) * 100.0 + table_teds + formula_score) / 3.0;
}

}  // namespace docparse
