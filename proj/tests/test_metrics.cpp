#include <cmath>
#include <random>

#include "doctest.h"

#include "docparse/metrics.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace docparse;

namespace {

BBox nb(int x1, int y1, int x2, int y2) {
  return BBox{x1, y1, x2, y2, CoordSpace::Native};
}

// Five text lines and their paragraph hull: the layout-granularity fixture.
struct LineFixture {
  std::vector<BBox> gt_lines;
  std::vector<BBox> pred_lines;   // 3 exact, 2 shifted past the IoU gate
  std::vector<BBox> paragraph;    // exact hull of the lines
  std::vector<BBox> loose;        // sloppy paragraph box
  int side = 200;
};

LineFixture make_line_fixture() {
  LineFixture f;
  for (int i = 0; i < 5; ++i) {
    f.gt_lines.push_back(nb(20, 20 + 24 * i, 180, 40 + 24 * i));
  }
  for (int i = 0; i < 3; ++i) f.pred_lines.push_back(f.gt_lines[i]);
  for (int i = 3; i < 5; ++i) {
    BBox shifted = f.gt_lines[i];
    shifted.y1 += 8;  // IoU 12/28 < 0.5
    shifted.y2 += 8;
    f.pred_lines.push_back(shifted);
  }
  f.paragraph = {nb(20, 20, 180, 136)};
  f.loose = {nb(10, 10, 190, 170)};
  return f;
}

}  // namespace

TEST_CASE("page_iou pinned examples") {
  CHECK(page_iou({nb(0, 0, 10, 10)}, {nb(0, 0, 10, 10)}, 20, 20) == 1.0);
  CHECK(page_iou({nb(0, 0, 10, 10)},
                 {nb(0, 0, 10, 5), nb(0, 5, 10, 10)}, 20, 20) == 1.0);
  CHECK(page_iou({nb(0, 0, 10, 10), nb(0, 0, 10, 10)},
                 {nb(0, 0, 10, 10)}, 20, 20) == 0.5);
}

TEST_CASE("page_iou empty-side semantics") {
  PageIouResult both = page_iou_detail({}, {}, 10, 10);
  CHECK(both.value == 1.0);
  CHECK_FALSE(both.zero_denominator);

  PageIouResult one = page_iou_detail({nb(0, 0, 5, 5)}, {}, 10, 10);
  CHECK(one.value == 0.0);
  CHECK(one.zero_denominator);
  PageIouResult other = page_iou_detail({}, {nb(0, 0, 5, 5)}, 10, 10);
  CHECK(other.value == 0.0);
  CHECK(other.zero_denominator);
}

TEST_CASE("page_iou agrees with the per-pixel oracle") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(8, 64);
  std::uniform_int_distribution<int> n_boxes(0, 10);
  for (int i = 0; i < 500; ++i) {
    int w = dim(rng);
    int h = dim(rng);
    auto boxes = [&](int n) {
      std::vector<BBox> out;
      for (int k = 0; k < n; ++k) {
        int x1 = gen::pick_int(rng, 0, w - 1);
        int y1 = gen::pick_int(rng, 0, h - 1);
        out.push_back(nb(x1, y1, gen::pick_int(rng, x1 + 1, w),
                         gen::pick_int(rng, y1 + 1, h)));
      }
      return out;
    };
    std::vector<BBox> pred = boxes(n_boxes(rng));
    std::vector<BBox> gt = boxes(n_boxes(rng));
    CAPTURE(i);
    double fast = page_iou(pred, gt, w, h);
    double slow = oracle::page_iou(pred, gt, w, h);
    REQUIRE(std::fabs(fast - slow) <= 1e-9);
    REQUIRE(page_iou(gt, pred, w, h) == fast);
  }
}

TEST_CASE("page_iou split invariance over guillotine partitions") {
  std::mt19937_64 rng(103);
  for (int i = 0; i < 200; ++i) {
    int w = gen::pick_int(rng, 4, 60);
    int h = gen::pick_int(rng, 4, 60);
    std::vector<BBox> parts = oracle::guillotine_partition(rng, w, h, 12);
    CAPTURE(i);
    REQUIRE(page_iou(parts, {nb(0, 0, w, h)}, w, h) == 1.0);
  }
}

TEST_CASE("recall_at_iou pinned examples") {
  CHECK(recall_at_iou({nb(0, 0, 10, 10)}, {nb(0, 0, 10, 10)}) == 1.0);
  CHECK(recall_at_iou({nb(0, 0, 10, 10)}, {nb(100, 100, 110, 110)}) == 0.0);
  CHECK(recall_at_iou({}, {}) == 1.0);
  CHECK(recall_at_iou({nb(0, 0, 10, 10)}, {}) == 1.0);
}

TEST_CASE("greedy matching consumes each prediction once") {
  // One fat prediction overlapping two gt boxes can only claim one.
  std::vector<BBox> pred = {nb(0, 0, 10, 20)};
  std::vector<BBox> gt = {nb(0, 0, 10, 12), nb(0, 8, 10, 20)};
  CHECK(recall_at_iou(pred, gt, 0.5) == 0.5);
}

TEST_CASE("granularity mismatch fixture reproduces the recall blind spot") {
  LineFixture f = make_line_fixture();

  // Paragraph-level prediction looks perfect against the paragraph gt.
  CHECK(recall_at_iou(f.paragraph, f.paragraph, 0.5) == 1.0);
  // The line-level prediction misses the two shifted lines.
  CHECK(recall_at_iou(f.pred_lines, f.gt_lines, 0.5) == 0.6);

  // PageIoU resolves the blind spot: against line gt, honest line boxes
  // beat a loose paragraph box.
  double line_score = page_iou(f.pred_lines, f.gt_lines, f.side, f.side);
  double loose_score = page_iou(f.loose, f.gt_lines, f.side, f.side);
  CHECK(line_score > loose_score);
  // min-sum: 3 exact lines (9600) + shifted line overlaps of 12, 4, and 12
  // rows of width 160; max-sum: 2 * 16000 - min-sum.
  CHECK(line_score == doctest::Approx(14080.0 / 17920.0).epsilon(1e-12));
  CHECK(loose_score == doctest::Approx(16000.0 / 28800.0).epsilon(1e-12));
  CHECK(line_score ==
        oracle::page_iou(f.pred_lines, f.gt_lines, f.side, f.side));
}

TEST_CASE("tree edit distance pinned examples") {
  TableNode a{"table", 1, 1, "", {TableNode{"tr", 1, 1, "", {make_td("A")}}}};
  TableNode b{"table", 1, 1, "", {TableNode{"tr", 1, 1, "", {make_td("B")}}}};
  CHECK(tree_edit_distance(a, a) == 0.0);
  CHECK(tree_edit_distance(a, b) == 1.0);
  CHECK(teds(a, a) == 1.0);
  CHECK(teds(a, b) == doctest::Approx(1.0 - 1.0 / 3.0).epsilon(1e-12));
  CHECK(teds(a, b, true) == 1.0);

  TableNode two{"table", 1, 1, "",
                {TableNode{"tr", 1, 1, "", {make_td("A"), make_td("B")}}}};
  CHECK(teds(a, two, true) == 0.75);
}

TEST_CASE("span attribute mismatch costs a full unit") {
  TableNode plain{"table", 1, 1, "", {TableNode{"tr", 1, 1, "", {make_td("A")}}}};
  TableNode wide = plain;
  wide.children[0].children[0].colspan = 2;
  CHECK(tree_edit_distance(plain, wide, true) == 1.0);
  CHECK(teds(plain, wide, true) == doctest::Approx(1.0 - 1.0 / 3.0));
}

TEST_CASE("teds agrees exactly with the recursive oracle") {
  std::mt19937_64 rng(211);
  int pairs = 0;
  while (pairs < 1000) {
    TableNode a = gen::random_tree(rng, 6);
    TableNode b = gen::random_tree(rng, 6);
    ++pairs;
    CAPTURE(pairs);
    double fast = tree_edit_distance(a, b, false);
    double fast_s = tree_edit_distance(a, b, true);
    REQUIRE(fast == oracle::tree_edit_distance(a, b, false));
    REQUIRE(fast_s == oracle::tree_edit_distance(a, b, true));
    REQUIRE(tree_edit_distance(b, a, false) == fast);

    double full = teds(a, b, false);
    double structural = teds(a, b, true);
    REQUIRE(full >= 0.0);
    REQUIRE(full <= 1.0);
    REQUIRE(structural >= full);
    REQUIRE(teds(a, a) == 1.0);
  }
}

TEST_CASE("levenshtein and norm_edit_distance pinned examples") {
  CHECK(norm_edit_distance("abc", "abc") == 0.0);
  CHECK(norm_edit_distance("abc", "abd") == doctest::Approx(1.0 / 3.0));
  CHECK(norm_edit_distance("", "x") == 1.0);
  CHECK(norm_edit_distance("", "") == 0.0);
  CHECK(levenshtein("kitten", "sitting") == 3);
  // Code points, not bytes.
  CHECK(levenshtein("\xc3\xa9", "e") == 1);
}

TEST_CASE("levenshtein triangle inequality") {
  std::mt19937_64 rng(223);
  for (int i = 0; i < 2000; ++i) {
    std::string a = gen::random_utf8(rng);
    std::string b = gen::random_utf8(rng);
    std::string c = gen::random_utf8(rng);
    CAPTURE(i);
    REQUIRE(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    REQUIRE(levenshtein(a, b) == levenshtein(b, a));
    REQUIRE(levenshtein(a, a) == 0);
  }
}

TEST_CASE("latex tokenization and formula consistency") {
  CHECK(latex_tokenize("\\frac{a}{b}") ==
        std::vector<std::string>{"\\frac", "{", "a", "}", "{", "b", "}"});
  CHECK(formula_consistency("a+b", "a+b") == 1.0);
  CHECK(formula_consistency("a+b", "a + b") == 1.0);
  CHECK(formula_consistency("\\cdots", "\\dotsb") == 0.0);
  CHECK(formula_consistency("", "") == 1.0);
}

TEST_CASE("overall aggregation reproduces the reference rows") {
  CHECK(std::fabs(overall_score(0.047, 88.22, 88.46) - 90.67) <= 0.01 + 1e-9);
  CHECK(std::fabs(overall_score(0.048, 86.78, 83.22) - 88.41) <= 0.01 + 1e-9);
  CHECK(overall_score(0.0, 100.0, 100.0) == 100.0);
}

TEST_CASE("overall aggregation rejects out-of-range inputs") {
  CHECK_THROWS_AS(overall_score(1.5, 50.0, 50.0), std::out_of_range);
  CHECK_THROWS_AS(overall_score(-0.1, 50.0, 50.0), std::out_of_range);
  CHECK_THROWS_AS(overall_score(0.5, 101.0, 50.0), std::out_of_range);
  CHECK_THROWS_AS(overall_score(0.5, 50.0, -1.0), std::out_of_range);
}

TEST_CASE("overall aggregation is affine in each argument") {
  double base = overall_score(0.5, 50.0, 50.0);
  double d_text = overall_score(0.6, 50.0, 50.0) - base;
  CHECK(overall_score(0.7, 50.0, 50.0) - overall_score(0.6, 50.0, 50.0) ==
        doctest::Approx(d_text).epsilon(1e-12));
  double d_table = overall_score(0.5, 60.0, 50.0) - base;
  CHECK(overall_score(0.5, 70.0, 50.0) - overall_score(0.5, 60.0, 50.0) ==
        doctest::Approx(d_table).epsilon(1e-12));
  CHECK(d_table == doctest::Approx(10.0 / 3.0));
}
