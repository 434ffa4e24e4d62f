#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "docparse/imic.hpp"
#include "docparse/layout_protocol.hpp"
#include "docparse/metrics.hpp"
#include "docparse/table_tree.hpp"
#include "support/oracles.hpp"

using namespace docparse;

namespace {

LayoutElement element_at(int order, BBox box) {
  LayoutElement e;
  e.order = order;
  e.category = LayoutCategory::Text;
  e.bbox = box;
  e.bbox.space = CoordSpace::Thumbnail;
  return e;
}

std::string stream_of(const std::vector<BBox>& boxes) {
  std::vector<LayoutElement> elements;
  for (size_t i = 0; i < boxes.size(); ++i) {
    elements.push_back(element_at(static_cast<int>(i), boxes[i]));
  }
  return serialize_layout_tokens(elements);
}

MiningSample sample_with_fill(const std::string& id, uint8_t fill) {
  return MiningSample{id, Raster(64, 64, fill)};
}

// The scripted key for a layout-task sample: the miner submits the
// square thumbnail, which for a uniform fill is the same uniform fill.
std::string layout_key(const MiningSample& sample, int side) {
  return fingerprint_hex(resize_nearest(sample.image, side, side));
}

}  // namespace

TEST_CASE("mining config validation") {
  MiningConfig config;
  config.runs_per_sample = 1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.runs_per_sample = 2;
  config.threshold = 1.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.threshold = 0.9;
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("identical outputs are perfectly consistent") {
  std::string stream = stream_of({BBox{100, 100, 400, 200},
                                  BBox{100, 300, 400, 420}});
  MockBackend mock;
  mock.add_entry(TaskKind::Layout, "*", {stream});

  MiningConfig config;
  config.runs_per_sample = 3;
  ConsistencyReport report = mine(sample_with_fill("s0", 9), mock, config);

  CHECK(report.effective_runs == 3);
  REQUIRE(report.pairwise.size() == 3);
  for (double p : report.pairwise) CHECK(p == 1.0);
  CHECK(report.score == 1.0);
  CHECK_FALSE(report.hard_case);
  CHECK_FALSE(report.inconclusive);
  CHECK(report.metric_name == "page_iou");
}

TEST_CASE("disjoint layout runs score zero and flag hard") {
  MockBackend mock;
  mock.add_entry(TaskKind::Layout, "*",
                 {stream_of({BBox{0, 0, 100, 100}}),
                  stream_of({BBox{500, 500, 600, 600}})});
  MiningConfig config;
  config.runs_per_sample = 2;
  ConsistencyReport report = mine(sample_with_fill("s1", 10), mock, config);
  REQUIRE(report.pairwise.size() == 1);
  CHECK(report.pairwise[0] == 0.0);
  CHECK(report.score == 0.0);
  CHECK(report.hard_case);
}

TEST_CASE("table consistency uses tree similarity with the documented mean") {
  std::string same = "<fcel>A<fcel>B<nl>";
  std::string diff = "<fcel>A<fcel>C<nl>";
  MockBackend mock;
  mock.add_entry(TaskKind::Table, "*", {same, same, diff});

  MiningConfig config;
  config.task = TaskKind::Table;
  config.runs_per_sample = 3;
  ConsistencyReport report = mine(sample_with_fill("t0", 11), mock, config);

  TableNode a = tree_from_html("<table><tr><td>A</td><td>B</td></tr></table>");
  TableNode b = tree_from_html("<table><tr><td>A</td><td>C</td></tr></table>");
  double s = 1.0 - oracle::tree_edit_distance(a, b, false) / 4.0;
  REQUIRE(report.pairwise.size() == 3);
  CHECK(report.score == doctest::Approx((1.0 + s + s) / 3.0).epsilon(1e-12));
  CHECK(report.metric_name == "teds");
}

TEST_CASE("invalid structure fails its run, not the sample") {
  MockBackend mock;
  mock.add_entry(TaskKind::Table, "*",
                 {"<fcel>A<nl>", "<fcel>A<nl><fcel>B<fcel>C<nl>",
                  "<fcel>A<nl>"});
  MiningConfig config;
  config.task = TaskKind::Table;
  config.runs_per_sample = 3;
  ConsistencyReport report = mine(sample_with_fill("t1", 12), mock, config);
  CHECK(report.effective_runs == 2);
  CHECK(report.run_errors.size() == 1);
  REQUIRE(report.pairwise.size() == 1);
  CHECK(report.score == 1.0);
  CHECK_FALSE(report.inconclusive);
}

TEST_CASE("fewer than two usable runs is inconclusive") {
  MockBackend mock;
  mock.add_entry(TaskKind::Table, "*",
                 {"<fcel>A<nl>", "<lcel><nl>", "<lcel><nl>"});
  MiningConfig config;
  config.task = TaskKind::Table;
  config.runs_per_sample = 3;
  ConsistencyReport report = mine(sample_with_fill("t2", 13), mock, config);
  CHECK(report.effective_runs == 1);
  CHECK(report.inconclusive);
  CHECK(report.pairwise.empty());
  CHECK_FALSE(report.hard_case);
}

TEST_CASE("formula task uses token-level consistency") {
  MockBackend mock;
  mock.add_entry(TaskKind::Formula, "*", {"a+b", "a + b"});
  MiningConfig config;
  config.task = TaskKind::Formula;
  config.runs_per_sample = 2;
  ConsistencyReport report = mine(sample_with_fill("f0", 14), mock, config);
  CHECK(report.score == 1.0);
  CHECK(report.metric_name == "formula_token_consistency");
}

TEST_CASE("min aggregator takes the worst pair") {
  std::string same = "<fcel>A<fcel>B<nl>";
  std::string diff = "<fcel>A<fcel>C<nl>";
  MockBackend mock;
  mock.add_entry(TaskKind::Table, "*", {same, same, diff});
  MiningConfig config;
  config.task = TaskKind::Table;
  config.runs_per_sample = 3;
  config.aggregator = ConsistencyAggregator::Min;
  ConsistencyReport report = mine(sample_with_fill("t3", 15), mock, config);
  TableNode a = tree_from_html("<table><tr><td>A</td><td>B</td></tr></table>");
  TableNode b = tree_from_html("<table><tr><td>A</td><td>C</td></tr></table>");
  double s = 1.0 - oracle::tree_edit_distance(a, b, false) / 4.0;
  CHECK(report.score == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("consistency is non-increasing in jitter magnitude") {
  // Four far-apart boxes; each (box, run) pair gets a fixed unit
  // displacement direction, scaled by the jitter level. Larger jitter can
  // only shrink pairwise overlap, so the mean pairwise score must be
  // monotone non-increasing across levels.
  const int kLevels[] = {0, 1, 2, 4, 8};
  const BBox base[] = {BBox{100, 100, 180, 140}, BBox{600, 100, 680, 140},
                       BBox{100, 600, 180, 640}, BBox{600, 600, 680, 640}};
  const int dirs[][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

  for (uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    int pattern[4][3];  // direction index per (box, run)
    for (auto& row : pattern) {
      for (int& d : row) d = std::uniform_int_distribution<int>(0, 3)(rng);
    }

    double previous = 2.0;
    for (int level : kLevels) {
      std::vector<std::string> runs;
      for (int r = 0; r < 3; ++r) {
        std::vector<BBox> boxes;
        for (int b = 0; b < 4; ++b) {
          BBox box = base[b];
          box.x1 += dirs[pattern[b][r]][0] * level;
          box.x2 += dirs[pattern[b][r]][0] * level;
          box.y1 += dirs[pattern[b][r]][1] * level;
          box.y2 += dirs[pattern[b][r]][1] * level;
          boxes.push_back(box);
        }
        runs.push_back(stream_of(boxes));
      }
      MockBackend mock;
      mock.add_entry(TaskKind::Layout, "*", {runs[0], runs[1], runs[2]});
      MiningConfig config;
      config.runs_per_sample = 3;
      ConsistencyReport report =
          mine(sample_with_fill("jitter", 16), mock, config);
      CAPTURE(seed);
      CAPTURE(level);
      REQUIRE(report.effective_runs == 3);
      REQUIRE(report.score <= previous + 1e-12);
      previous = report.score;
    }
  }
}

TEST_CASE("corpus mining finds exactly the planted hard cases") {
  MiningConfig config;
  config.runs_per_sample = 3;
  config.threshold = 0.9;

  std::vector<MiningSample> samples;
  MockBackend mock;
  std::string stable = stream_of({BBox{100, 100, 500, 200}});
  for (int i = 0; i < 10; ++i) {
    MiningSample s = sample_with_fill("sample_" + std::to_string(i),
                                      static_cast<uint8_t>(20 + i * 9));
    bool hard = i % 3 == 0;  // samples 0, 3, 6, 9
    if (hard) {
      mock.add_entry(TaskKind::Layout, layout_key(s, config.thumbnail_side),
                     {stream_of({BBox{0, 0, 100, 100}}),
                      stream_of({BBox{400, 400, 500, 500}}),
                      stream_of({BBox{800, 800, 900, 900}})});
    } else {
      mock.add_entry(TaskKind::Layout, layout_key(s, config.thumbnail_side),
                     {stable});
    }
    samples.push_back(std::move(s));
  }

  std::vector<ConsistencyReport> manifest = mine_corpus(samples, mock, config);
  REQUIRE(manifest.size() == 10);

  MiningSummary summary = summarize(manifest);
  CHECK(summary.total == 10);
  CHECK(summary.hard == 4);
  CHECK(summary.easy == 6);
  CHECK(summary.inconclusive == 0);

  // Hardest first: the four zero-score samples, ties broken by id.
  for (int i = 0; i < 4; ++i) {
    CHECK(manifest[i].hard_case);
    CHECK(manifest[i].score == 0.0);
  }
  CHECK(manifest[0].sample_id == "sample_0");
  CHECK(manifest[1].sample_id == "sample_3");
  CHECK(manifest[2].sample_id == "sample_6");
  CHECK(manifest[3].sample_id == "sample_9");
  for (size_t i = 4; i < manifest.size(); ++i) {
    CHECK_FALSE(manifest[i].hard_case);
    CHECK(manifest[i].score == 1.0);
  }
  for (size_t i = 1; i < manifest.size(); ++i) {
    CHECK(manifest[i - 1].score <= manifest[i].score);
  }

  CHECK(mine_corpus({}, mock, config).empty());
}

TEST_CASE("report serialization is single-line json with stable keys") {
  MockBackend mock;
  mock.add_entry(TaskKind::Layout, "*", {stream_of({BBox{0, 0, 50, 50}})});
  MiningConfig config;
  config.runs_per_sample = 2;
  ConsistencyReport report = mine(sample_with_fill("sj", 33), mock, config);

  std::string line = report_to_json(report);
  CHECK(line.find('\n') == std::string::npos);
  nlohmann::json parsed = nlohmann::json::parse(line);
  CHECK(parsed["sample_id"] == "sj");
  CHECK(parsed["task"] == "layout");
  CHECK(parsed["score"] == 1.0);
  CHECK(parsed["hard_case"] == false);

  std::string jsonl = manifest_to_jsonl({report, report});
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 2);
}
