#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "docparse/metrics.hpp"
#include "docparse/otsl.hpp"
#include "docparse/raster.hpp"
#include "docparse/table_tree.hpp"
#include "support/test_util.hpp"

namespace fs = std::filesystem;
using testutil::CommandResult;
using testutil::read_file;
using testutil::run_command;
using testutil::run_command_stdout;
using testutil::TempDir;
using testutil::write_file;

namespace {

const std::string kCli = DOCPARSE_CLI_PATH;
const std::string kFixtures = DOCPARSE_FIXTURE_DIR;
const std::string kPipelineDir = kFixtures + "/pipeline";
const std::string kGolden = kPipelineDir + "/golden";

std::string parse_cmd(const fs::path& out_dir, int workers) {
  return kCli + " parse " + kPipelineDir + " --mock-script " + kPipelineDir +
         "/mock_script.json --workers " + std::to_string(workers) + " --out " +
         out_dir.string();
}

const std::vector<std::string> kOutputs = {
    "doc.md",
    "pages/page_000.layout.json", "pages/page_000.blocks.json",
    "pages/page_001.layout.json", "pages/page_001.blocks.json",
    "pages/page_002.layout.json", "pages/page_002.blocks.json"};

std::string golden_name(const std::string& output) {
  size_t slash = output.rfind('/');
  return slash == std::string::npos ? output : output.substr(slash + 1);
}

}  // namespace

TEST_CASE("parse output is byte-identical across runs and worker counts") {
  TempDir tmp("cli_determinism");
  int run_index = 0;
  for (int repeat = 0; repeat < 5; ++repeat) {
    for (int workers : {1, 4, 16}) {
      fs::path out = tmp.path() / ("run_" + std::to_string(run_index++));
      CommandResult r = run_command(parse_cmd(out, workers));
      CAPTURE(r.output);
      REQUIRE(r.exit_code == 0);
      for (const std::string& rel : kOutputs) {
        CAPTURE(rel);
        REQUIRE(read_file(out / rel) ==
                read_file(fs::path(kGolden) / golden_name(rel)));
      }
    }
  }
}

TEST_CASE("parse on an empty input directory warns and exits clean") {
  TempDir tmp("cli_empty");
  fs::create_directories(tmp.path() / "pages_in");
  CommandResult r = run_command(kCli + " parse " +
                                (tmp.path() / "pages_in").string() +
                                " --mock-script " + kPipelineDir +
                                "/mock_script.json --out " +
                                (tmp.path() / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("no .pgm inputs") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path() / "out" / "doc.md"));
}

TEST_CASE("parse against an unreachable backend is fatal") {
  TempDir tmp("cli_unreachable");
  CommandResult r = run_command(
      kCli + " parse " + kPipelineDir + "/page_000.pgm --backend-url " +
      "http://127.0.0.1:9 --out " + (tmp.path() / "out").string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("otsl2html renders the documented table") {
  CommandResult r =
      run_command_stdout(kCli + " otsl2html " + kFixtures + "/otsl/sites.otsl");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("<tr><td colspan=\"10\">Cl dominance sites</td></tr>") !=
        std::string::npos);
  CHECK(r.output.find("<tr><td colspan=\"10\">Na dominance sites</td></tr>") !=
        std::string::npos);

  // Stdout must be exactly the converter's output for the same file.
  using namespace docparse;
  OtslGrid grid =
      build_grid(tokenize_otsl(read_file(kFixtures + "/otsl/sites.otsl")).tokens);
  CHECK(r.output == grid_to_html(grid) + "\n");
}

TEST_CASE("otsl2html single cell and structural failure") {
  TempDir tmp("cli_otsl");
  write_file(tmp.path() / "one.otsl", "<fcel>A<nl>");
  CommandResult ok = run_command_stdout(
      kCli + " otsl2html " + (tmp.path() / "one.otsl").string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output == "<table><tr><td>A</td></tr></table>\n");

  write_file(tmp.path() / "ragged.otsl", "<fcel>A<nl><fcel>B<fcel>C<nl>");
  CommandResult bad = run_command(
      kCli + " otsl2html " + (tmp.path() / "ragged.otsl").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("RaggedRows") != std::string::npos);
}

TEST_CASE("eval layout on identical files scores 1.0") {
  std::string layout = kGolden + "/page_000.layout.json";
  CommandResult r = run_command_stdout(kCli + " eval layout --pred " + layout +
                                       " --gt " + layout);
  REQUIRE(r.exit_code == 0);
  nlohmann::json report = nlohmann::json::parse(r.output);
  CHECK(report["task"] == "layout");
  REQUIRE(report["pairs"].size() == 1);
  CHECK(report["pairs"][0]["page_iou"] == 1.0);
  CHECK(report["pairs"][0]["recall_at_iou"] == 1.0);
  CHECK(report["pairs"][0]["zero_denominator"] == false);
  CHECK(report["scored"] == 1);
  CHECK(report["failed"] == 0);
  CHECK(report["mean"] == 1.0);
}

TEST_CASE("eval pairs directories by filename stem") {
  TempDir tmp("cli_eval_text");
  write_file(tmp.path() / "pred" / "a.txt", "abc");
  write_file(tmp.path() / "pred" / "b.txt", "hello");
  write_file(tmp.path() / "pred" / "only_pred.txt", "x");
  write_file(tmp.path() / "gt" / "a.txt", "abd");
  write_file(tmp.path() / "gt" / "b.txt", "hello");
  write_file(tmp.path() / "gt" / "only_gt.txt", "y");

  CommandResult r = run_command_stdout(
      kCli + " eval text --pred " + (tmp.path() / "pred").string() + " --gt " +
      (tmp.path() / "gt").string());
  CHECK(r.exit_code == 1);  // unmatched operands → partial
  nlohmann::json report = nlohmann::json::parse(r.output);
  REQUIRE(report["pairs"].size() == 2);
  CHECK(report["pairs"][0]["id"] == "a");
  CHECK(std::fabs(report["pairs"][0]["norm_edit_distance"].get<double>() -
                  1.0 / 3.0) < 1e-12);
  CHECK(report["pairs"][1]["norm_edit_distance"] == 0.0);
  CHECK(report["unmatched_pred"] == 1);
  CHECK(report["unmatched_gt"] == 1);
  CHECK(std::fabs(report["mean"].get<double>() - 1.0 / 6.0) < 1e-12);
}

TEST_CASE("eval table accepts OTSL and HTML operands") {
  TempDir tmp("cli_eval_table");
  write_file(tmp.path() / "pred.otsl", "<fcel>A<fcel>B<nl>");
  write_file(tmp.path() / "gt.html",
             "<table><tr><td>A</td><td>B</td></tr></table>");
  CommandResult same = run_command_stdout(
      kCli + " eval table --pred " + (tmp.path() / "pred.otsl").string() +
      " --gt " + (tmp.path() / "gt.html").string());
  REQUIRE(same.exit_code == 0);
  nlohmann::json report = nlohmann::json::parse(same.output);
  CHECK(report["pairs"][0]["teds"] == 1.0);
  CHECK(report["pairs"][0]["teds_s"] == 1.0);

  write_file(tmp.path() / "gt2.html",
             "<table><tr><td>A</td><td>C</td></tr></table>");
  CommandResult diff = run_command_stdout(
      kCli + " eval table --pred " + (tmp.path() / "pred.otsl").string() +
      " --gt " + (tmp.path() / "gt2.html").string());
  nlohmann::json dreport = nlohmann::json::parse(diff.output);
  using namespace docparse;
  double expected =
      teds(tree_from_html("<table><tr><td>A</td><td>B</td></tr></table>"),
           tree_from_html("<table><tr><td>A</td><td>C</td></tr></table>"));
  CHECK(dreport["pairs"][0]["teds"] == expected);
  CHECK(dreport["pairs"][0]["teds_s"] == 1.0);
}

TEST_CASE("eval formula reports token-level consistency") {
  TempDir tmp("cli_eval_formula");
  write_file(tmp.path() / "p.tex", "\\cdots");
  write_file(tmp.path() / "g.tex", "\\dotsb");
  CommandResult r = run_command_stdout(
      kCli + " eval formula --pred " + (tmp.path() / "p.tex").string() +
      " --gt " + (tmp.path() / "g.tex").string());
  REQUIRE(r.exit_code == 0);
  nlohmann::json report = nlohmann::json::parse(r.output);
  CHECK(report["pairs"][0]["formula_consistency"] == 0.0);
}

TEST_CASE("eval overall reproduces the reference aggregate") {
  CommandResult r = run_command_stdout(
      kCli + " eval overall --text-edit 0.047 --table-teds 88.22 "
      "--formula 88.46");
  REQUIRE(r.exit_code == 0);
  nlohmann::json report = nlohmann::json::parse(r.output);
  CHECK(report["task"] == "overall");
  CHECK(std::fabs(report["overall"].get<double>() - 90.67) <= 0.01 + 1e-9);

  CommandResult bad = run_command(kCli + " eval overall --text-edit 7 "
                                  "--table-teds 88.22 --formula 88.46");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("mine emits a manifest and summary for a scripted corpus") {
  TempDir tmp("cli_mine");
  // Two corpus images with distinct content.
  docparse::Raster a(64, 64, 40);
  docparse::Raster b(64, 64, 90);
  fs::create_directories(tmp.path() / "corpus");
  docparse::write_pgm_binary(a, (tmp.path() / "corpus" / "easy.pgm").string());
  docparse::write_pgm_binary(b, (tmp.path() / "corpus" / "hard.pgm").string());

  // Stable layout for one, divergent layouts for the other.
  std::string stable =
      "<|box_start|>100 100 500 200<|box_end|><|ref_start|>text<|ref_end|>"
      "<|rotate_up|>";
  std::string run1 =
      "<|box_start|>0 0 100 100<|box_end|><|ref_start|>text<|ref_end|>"
      "<|rotate_up|>";
  std::string run2 =
      "<|box_start|>600 600 700 700<|box_end|><|ref_start|>text<|ref_end|>"
      "<|rotate_up|>";
  using docparse::fingerprint_hex;
  using docparse::resize_nearest;
  nlohmann::ordered_json script;
  script["entries"] = nlohmann::ordered_json::array();
  script["entries"].push_back(
      {{"task", "layout"},
       {"fingerprint", fingerprint_hex(resize_nearest(a, 1036, 1036))},
       {"responses", {stable}}});
  script["entries"].push_back(
      {{"task", "layout"},
       {"fingerprint", fingerprint_hex(resize_nearest(b, 1036, 1036))},
       {"responses", {run1, run2, run1}}});
  write_file(tmp.path() / "script.json", script.dump(2));

  CommandResult r = run_command_stdout(
      kCli + " mine --corpus " + (tmp.path() / "corpus").string() +
      " --task layout -k 3 --tau 0.9 --mock-script " +
      (tmp.path() / "script.json").string() + " --manifest " +
      (tmp.path() / "manifest.jsonl").string() + " --summary -");
  REQUIRE(r.exit_code == 0);

  nlohmann::json summary = nlohmann::json::parse(r.output);
  CHECK(summary["total"] == 2);
  CHECK(summary["hard"] == 1);
  CHECK(summary["easy"] == 1);
  CHECK(summary["inconclusive"] == 0);

  std::string manifest = read_file(tmp.path() / "manifest.jsonl");
  size_t first_line_end = manifest.find('\n');
  REQUIRE(first_line_end != std::string::npos);
  nlohmann::json hardest =
      nlohmann::json::parse(manifest.substr(0, first_line_end));
  CHECK(hardest["sample_id"] == "hard");
  CHECK(hardest["hard_case"] == true);
}

TEST_CASE("config file values apply and flags override them") {
  TempDir tmp("cli_config");
  nlohmann::ordered_json config;
  config["backend"] = {{"mock_script", kPipelineDir + "/mock_script.json"}};
  config["cli"] = {{"output_dir", (tmp.path() / "from_config").string()}};
  write_file(tmp.path() / "run.json", config.dump(2));

  CommandResult from_config =
      run_command(kCli + " parse " + kPipelineDir + " --config " +
                  (tmp.path() / "run.json").string());
  REQUIRE(from_config.exit_code == 0);
  CHECK(fs::exists(tmp.path() / "from_config" / "doc.md"));

  CommandResult overridden = run_command(
      kCli + " parse " + kPipelineDir + " --config " +
      (tmp.path() / "run.json").string() + " --out " +
      (tmp.path() / "flag_wins").string());
  REQUIRE(overridden.exit_code == 0);
  CHECK(fs::exists(tmp.path() / "flag_wins" / "doc.md"));
  CHECK(read_file(tmp.path() / "flag_wins" / "doc.md") ==
        read_file(fs::path(kGolden) / "doc.md"));
}
