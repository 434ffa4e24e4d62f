// docparse - two-stage document parsing, evaluation, and hard-case mining.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "docparse/backend.hpp"
#include "docparse/imic.hpp"
#include "docparse/layout.hpp"
#include "docparse/metrics.hpp"
#include "docparse/otsl.hpp"
#include "docparse/pipeline.hpp"
#include "docparse/run_config.hpp"
#include "docparse/table_tree.hpp"

namespace fs = std::filesystem;
using namespace docparse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitFatal = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::unique_ptr<InferenceBackend> build_backend(const RunConfig& config) {
  if (!config.mock_script.empty()) {
    return std::make_unique<MockBackend>(
        MockBackend::from_file(config.mock_script));
  }
  if (!config.backend_url.empty()) {
    HttpBackendConfig http;
    http.base_url = config.backend_url;
    http.model = config.model;
    http.timeout_ms = config.timeout_ms;
    if (const char* key = std::getenv(config.api_key_env.c_str())) {
      http.api_key = key;
    }
    return std::make_unique<HttpBackend>(http);
  }
  throw std::runtime_error(
      "no backend configured: pass --backend-url or --mock-script");
}

PipelineConfig pipeline_config_from(const RunConfig& config) {
  PipelineConfig pc;
  pc.thumbnail_side = config.thumbnail_side;
  pc.max_in_flight = config.max_in_flight;
  pc.retry = config.retry;
  pc.policy = config.sampling_policy_file.empty()
                  ? SamplingPolicy::defaults()
                  : SamplingPolicy::from_file(config.sampling_policy_file);
  pc.assembly.include_margins = config.include_margins;
  pc.assembly.math_delimiter = config.math_delimiter;
  pc.assembly.adr_environment = config.adr_environment;
  return pc;
}

std::vector<fs::path> collect_pgm_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const std::string& input : inputs) {
    fs::path p(input);
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
          files.push_back(entry.path());
        }
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw std::runtime_error("input not found: " + input);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string page_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "page_%03d", index);
  return buf;
}

// --------------------------------------------------------------------------
// parse

int cmd_parse(const RunConfig& config, const std::vector<std::string>& inputs) {
  std::vector<fs::path> files = collect_pgm_inputs(inputs);
  if (files.empty()) {
    std::cerr << "warning: no .pgm inputs found, nothing to do\n";
    return kExitOk;
  }

  std::unique_ptr<InferenceBackend> backend = build_backend(config);
  Pipeline pipeline(*backend, pipeline_config_from(config));

  std::vector<Raster> pages;
  pages.reserve(files.size());
  for (const fs::path& f : files) pages.push_back(read_pgm(f.string()));

  ParsedDocument doc = pipeline.parse_document(pages);

  fs::path out_dir(config.output_dir);
  for (const ParsedPage& page : doc.pages) {
    std::string stem = page_stem(page.page_index);
    write_file(out_dir / "pages" / (stem + ".layout.json"),
               page_layout_to_json(page.layout));
    write_file(out_dir / "pages" / (stem + ".blocks.json"),
               parsed_page_to_json(page));
  }
  write_file(out_dir / "doc.md", assemble(doc));

  int failed_pages = 0;
  int skipped_blocks = 0;
  for (const ParsedPage& page : doc.pages) {
    if (page.failed) ++failed_pages;
    for (const ContentBlock& block : page.blocks) {
      if (block.kind == BlockKind::Skipped) ++skipped_blocks;
    }
  }
  if (failed_pages == static_cast<int>(doc.pages.size())) {
    std::cerr << "error: every page failed\n";
    return kExitFatal;
  }
  if (failed_pages > 0 || skipped_blocks > 0) {
    std::cerr << "warning: " << failed_pages << " page(s) failed, "
              << skipped_blocks << " block(s) skipped\n";
    return kExitPartial;
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// eval

struct EvalPair {
  std::string id;
  fs::path pred;
  fs::path gt;
};

struct EvalPairing {
  std::vector<EvalPair> pairs;
  int unmatched_pred = 0;
  int unmatched_gt = 0;
};

EvalPairing pair_operands(const std::string& pred, const std::string& gt) {
  EvalPairing out;
  if (fs::is_directory(pred) != fs::is_directory(gt)) {
    throw std::runtime_error(
        "eval operands must both be files or both be directories");
  }
  if (!fs::is_directory(pred)) {
    if (!fs::exists(pred)) throw std::runtime_error("missing file: " + pred);
    if (!fs::exists(gt)) throw std::runtime_error("missing file: " + gt);
    out.pairs.push_back({fs::path(pred).stem().string(), pred, gt});
    return out;
  }
  std::map<std::string, fs::path> pred_by_stem;
  std::map<std::string, fs::path> gt_by_stem;
  for (const auto& entry : fs::directory_iterator(pred)) {
    if (entry.is_regular_file()) {
      pred_by_stem[entry.path().stem().string()] = entry.path();
    }
  }
  for (const auto& entry : fs::directory_iterator(gt)) {
    if (entry.is_regular_file()) {
      gt_by_stem[entry.path().stem().string()] = entry.path();
    }
  }
  for (const auto& [stem, path] : pred_by_stem) {
    auto it = gt_by_stem.find(stem);
    if (it == gt_by_stem.end()) {
      ++out.unmatched_pred;
    } else {
      out.pairs.push_back({stem, path, it->second});
    }
  }
  for (const auto& [stem, path] : gt_by_stem) {
    if (!pred_by_stem.count(stem)) ++out.unmatched_gt;
  }
  return out;
}

std::vector<BBox> layout_boxes(const std::string& path) {
  PageLayout layout = page_layout_from_json(read_file(path));
  std::vector<BBox> boxes;
  boxes.reserve(layout.elements.size());
  for (const LayoutElement& e : layout.elements) boxes.push_back(e.bbox);
  return boxes;
}

TableNode table_operand(const fs::path& path) {
  std::string text = read_file(path.string());
  std::string ext = path.extension().string();
  bool html = ext == ".html" || ext == ".htm";
  if (!html && ext != ".otsl") {
    size_t first = text.find_first_not_of(" \t\r\n");
    html = first != std::string::npos && text.compare(first, 6, "<table") == 0;
  }
  if (html) return tree_from_html(text);
  OtslTokenizeResult tok = tokenize_otsl(text);
  return tree_from_grid(build_grid(tok.tokens));
}

int cmd_eval(const std::string& task, const std::string& pred,
             const std::string& gt, int raster_side, double iou_threshold,
             bool structure_only) {
  EvalPairing pairing = pair_operands(pred, gt);
  nlohmann::ordered_json report;
  report["task"] = task;
  report["pairs"] = nlohmann::ordered_json::array();
  int failures = 0;
  double sum_primary = 0.0;
  int scored = 0;

  for (const EvalPair& pair : pairing.pairs) {
    nlohmann::ordered_json jp;
    jp["id"] = pair.id;
    try {
      if (task == "layout") {
        std::vector<BBox> p = layout_boxes(pair.pred.string());
        std::vector<BBox> g = layout_boxes(pair.gt.string());
        PageIouResult r = page_iou_detail(p, g, raster_side, raster_side);
        jp["page_iou"] = r.value;
        jp["zero_denominator"] = r.zero_denominator;
        jp["recall_at_iou"] = recall_at_iou(p, g, iou_threshold);
        jp["iou_threshold"] = iou_threshold;
        sum_primary += r.value;
      } else if (task == "table") {
        TableNode p = table_operand(pair.pred);
        TableNode g = table_operand(pair.gt);
        double full = teds(p, g, false);
        jp["teds"] = full;
        jp["teds_s"] = teds(p, g, true);
        jp["structure_only"] = structure_only;
        sum_primary += structure_only ? jp["teds_s"].get<double>() : full;
      } else if (task == "text") {
        double d = norm_edit_distance(read_file(pair.pred.string()),
                                      read_file(pair.gt.string()));
        jp["norm_edit_distance"] = d;
        sum_primary += d;
      } else if (task == "formula") {
        double s = formula_consistency(read_file(pair.pred.string()),
                                       read_file(pair.gt.string()));
        jp["formula_consistency"] = s;
        sum_primary += s;
      }
      ++scored;
    } catch (const std::exception& err) {
      jp["error"] = err.what();
      ++failures;
    }
    report["pairs"].push_back(std::move(jp));
  }

  report["scored"] = scored;
  report["failed"] = failures;
  report["unmatched_pred"] = pairing.unmatched_pred;
  report["unmatched_gt"] = pairing.unmatched_gt;
  if (scored > 0) report["mean"] = sum_primary / scored;
  std::cout << report.dump(2) << "\n";
  if (scored == 0 && !pairing.pairs.empty()) return kExitFatal;
  return failures > 0 || pairing.unmatched_pred > 0 || pairing.unmatched_gt > 0
             ? kExitPartial
             : kExitOk;
}

int cmd_eval_overall(double text_edit, double table_teds, double formula) {
  nlohmann::ordered_json report;
  report["task"] = "overall";
  report["text_edit"] = text_edit;
  report["table_teds"] = table_teds;
  report["formula"] = formula;
  report["overall"] = overall_score(text_edit, table_teds, formula);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// mine

int cmd_mine(const RunConfig& config, const std::string& corpus,
             const std::string& task_str, int runs, std::optional<double> tau,
             double temperature, const std::string& aggregator, int workers,
             const std::string& manifest_path,
             const std::string& summary_path) {
  std::vector<fs::path> files = collect_pgm_inputs({corpus});
  std::vector<MiningSample> samples;
  samples.reserve(files.size());
  for (const fs::path& f : files) {
    samples.push_back({f.stem().string(), read_pgm(f.string())});
  }

  MiningConfig mc;
  mc.task = task_from_name(task_str);
  mc.runs_per_sample = runs > 0 ? runs : config.mine_runs;
  mc.threshold = tau ? *tau : config.mine_tau_for(mc.task);
  mc.temperature = temperature >= 0 ? temperature : config.mine_temperature;
  std::string agg = aggregator.empty() ? config.mine_aggregator : aggregator;
  mc.aggregator = agg == "min" ? ConsistencyAggregator::Min
                               : ConsistencyAggregator::Mean;
  mc.thumbnail_side = config.thumbnail_side;
  mc.workers = workers > 0 ? workers : config.max_in_flight;
  mc.validate();

  std::unique_ptr<InferenceBackend> backend = build_backend(config);
  std::vector<ConsistencyReport> reports = mine_corpus(samples, *backend, mc);
  MiningSummary summary = summarize(reports);

  std::string manifest = manifest_to_jsonl(reports);
  std::string summary_json = summary_to_json(summary, mc);
  if (manifest_path == "-") {
    std::cout << manifest;
  } else {
    write_file(manifest_path, manifest);
  }
  if (summary_path == "-") {
    std::cout << summary_json << "\n";
  } else {
    write_file(summary_path, summary_json);
  }
  return summary.inconclusive > 0 ? kExitPartial : kExitOk;
}

// --------------------------------------------------------------------------
// otsl2html

int cmd_otsl2html(const std::string& path) {
  std::string text = read_file(path);
  OtslTokenizeResult tok = tokenize_otsl(text);
  for (const OtslDiagnostic& d : tok.diagnostics) {
    std::cerr << "warning: byte " << d.offset << ": " << d.reason << "\n";
  }
  try {
    OtslGrid grid = build_grid(tok.tokens);
    std::cout << grid_to_html(grid) << "\n";
  } catch (const OtslError& err) {
    std::cerr << otsl_error_kind_name(err.kind()) << " at (" << err.row()
              << "," << err.col() << "): " << err.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage document parser, metrics, and hard-case miner"};
  app.require_subcommand(1);

  std::string config_path;
  RunConfig config;

  // Flags shared by parse and mine; applied over the config file.
  std::string backend_url, mock_script, out_dir, policy_file;
  int workers = 0;
  int thumbnail_side = 0;
  bool include_margins = false;

  auto add_backend_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--backend-url", backend_url,
                    "inference server base URL (http://host:port)");
    cmd->add_option("--mock-script", mock_script,
                    "scripted backend JSON (overrides --backend-url)");
    cmd->add_option("--workers", workers, "max in-flight requests");
    cmd->add_option("--thumbnail-side", thumbnail_side,
                    "detection raster side in pixels");
  };

  // parse
  auto* parse_cmd =
      app.add_subcommand("parse", "Run the two-stage parse on page images");
  std::vector<std::string> parse_inputs;
  parse_cmd->add_option("inputs", parse_inputs, ".pgm files or directories")
      ->required();
  add_backend_flags(parse_cmd);
  parse_cmd->add_option("--out", out_dir, "output directory");
  parse_cmd->add_option("--policy", policy_file, "sampling policy JSON");
  parse_cmd->add_flag("--include-margins", include_margins,
                      "keep header/footer content in the assembled output");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against GT");
  eval_cmd->require_subcommand(1);
  std::string pred_path, gt_path;
  int raster_side = kDefaultThumbnailSide;
  double iou_threshold = 0.5;
  bool structure_only = false;
  double ov_text_edit = 0.0, ov_table = 0.0, ov_formula = 0.0;
  std::vector<CLI::App*> eval_subs;
  for (const char* task : {"layout", "table", "text", "formula"}) {
    auto* sub = eval_cmd->add_subcommand(task);
    sub->add_option("--pred", pred_path, "prediction file or directory")
        ->required();
    sub->add_option("--gt", gt_path, "ground-truth file or directory")
        ->required();
    if (std::string(task) == "layout") {
      sub->add_option("--raster-side", raster_side, "scoring raster side");
      sub->add_option("--iou-threshold", iou_threshold, "recall threshold");
    }
    if (std::string(task) == "table") {
      sub->add_flag("--structure-only", structure_only,
                    "aggregate the text-blind score");
    }
    eval_subs.push_back(sub);
  }
  auto* overall_cmd = eval_cmd->add_subcommand("overall");
  overall_cmd->add_option("--text-edit", ov_text_edit, "text edit distance, [0,1]")
      ->required();
  overall_cmd->add_option("--table-teds", ov_table, "table score, [0,100]")
      ->required();
  overall_cmd->add_option("--formula", ov_formula, "formula score, [0,100]")
      ->required();

  // mine
  auto* mine_cmd =
      app.add_subcommand("mine", "Flag low-consistency samples as hard cases");
  std::string corpus, mine_task = "layout", aggregator, manifest_path = "-",
                      summary_path = "-";
  int mine_k = 0;
  double mine_tau = -1.0, mine_temp = -1.0;
  mine_cmd->add_option("--corpus", corpus, ".pgm sample directory")->required();
  mine_cmd->add_option("--task", mine_task, "layout|table|formula|text");
  mine_cmd->add_option("-k,--runs", mine_k, "stochastic runs per sample");
  mine_cmd->add_option("--tau", mine_tau, "hard-case threshold in [0,1]");
  mine_cmd->add_option("--temperature", mine_temp, "sampling temperature");
  mine_cmd->add_option("--aggregator", aggregator, "mean|min");
  mine_cmd->add_option("--manifest", manifest_path,
                       "manifest output path ('-' for stdout)");
  mine_cmd->add_option("--summary", summary_path,
                       "summary output path ('-' for stdout)");
  add_backend_flags(mine_cmd);

  // otsl2html
  auto* otsl_cmd =
      app.add_subcommand("otsl2html", "Convert a table structure file to HTML");
  std::string otsl_path;
  otsl_cmd->add_option("file", otsl_path, "input file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) config = RunConfig::from_file(config_path);
    if (!backend_url.empty()) config.backend_url = backend_url;
    if (!mock_script.empty()) config.mock_script = mock_script;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!policy_file.empty()) config.sampling_policy_file = policy_file;
    if (workers > 0) config.max_in_flight = workers;
    if (thumbnail_side > 0) config.thumbnail_side = thumbnail_side;
    if (include_margins) config.include_margins = true;
    config.validate();

    if (parse_cmd->parsed()) {
      return cmd_parse(config, parse_inputs);
    }
    if (eval_cmd->parsed()) {
      for (size_t i = 0; i < eval_subs.size(); ++i) {
        if (eval_subs[i]->parsed()) {
          static const char* kTasks[] = {"layout", "table", "text", "formula"};
          return cmd_eval(kTasks[i], pred_path, gt_path, raster_side,
                          iou_threshold, structure_only);
        }
      }
      if (overall_cmd->parsed()) {
        return cmd_eval_overall(ov_text_edit, ov_table, ov_formula);
      }
    }
    if (mine_cmd->parsed()) {
      return cmd_mine(config, corpus, mine_task, mine_k,
                      mine_tau >= 0 ? std::optional<double>(mine_tau)
                                    : std::nullopt,
                      mine_temp, aggregator, workers, manifest_path,
                      summary_path);
    }
    if (otsl_cmd->parsed()) {
      return cmd_otsl2html(otsl_path);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
