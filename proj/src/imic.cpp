#include "docparse/imic.hpp"

#include <algorithm>
#include <stdexcept>

#include "docparse/layout_protocol.hpp"
#include "docparse/metrics.hpp"
#include "docparse/otsl.hpp"
#include "docparse/parallel.hpp"
#include "docparse/table_tree.hpp"
#include "json.hpp"

namespace docparse {

void MiningConfig::validate() const {
  if (runs_per_sample < 2) {
    throw std::invalid_argument("mining config: need at least 2 runs");
  }
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("mining config: threshold outside [0,1]");
  }
  if (task == TaskKind::Layout && thumbnail_side <= 0) {
    throw std::invalid_argument("mining config: non-positive scoring raster");
  }
  if (workers < 1) {
    throw std::invalid_argument("mining config: need at least 1 worker");
  }
}

double layout_consistency(const std::vector<LayoutElement>& a,
                          const std::vector<LayoutElement>& b, int side) {
  std::vector<BBox> boxes_a;
  std::vector<BBox> boxes_b;
  boxes_a.reserve(a.size());
  boxes_b.reserve(b.size());
  for (const LayoutElement& e : a) boxes_a.push_back(e.bbox);
  for (const LayoutElement& e : b) boxes_b.push_back(e.bbox);
  return page_iou(boxes_a, boxes_b, side, side);
}

namespace {

const char* metric_for(TaskKind task) {
  switch (task) {
    case TaskKind::Layout:
      return "page_iou";
    case TaskKind::Table:
      return "teds";
    case TaskKind::Formula:
      return "formula_token_consistency";
    case TaskKind::Text:
      return "norm_edit_similarity";
  }
  return "unknown";
}

// Parsed form of one successful run, per task.
struct RunValue {
  std::vector<LayoutElement> layout;
  TableNode tree;
  std::string text;
};

bool parse_run(TaskKind task, const std::string& output, RunValue& value,
               std::string& error) {
  switch (task) {
    case TaskKind::Layout:
      value.layout = parse_layout_tokens(output).elements;
      return true;
    case TaskKind::Table: {
      OtslParseOutcome outcome = try_parse_otsl(output);
      if (!outcome.ok) {
        error = outcome.error;
        return false;
      }
      value.tree = tree_from_grid(outcome.grid);
      return true;
    }
    case TaskKind::Formula:
    case TaskKind::Text:
      value.text = output;
      return true;
  }
  return false;
}

double score_pair(TaskKind task, const RunValue& a, const RunValue& b,
                  int side) {
  switch (task) {
    case TaskKind::Layout:
      return layout_consistency(a.layout, b.layout, side);
    case TaskKind::Table:
      return teds(a.tree, b.tree);
    case TaskKind::Formula:
      return formula_consistency(a.text, b.text);
    case TaskKind::Text:
      return 1.0 - norm_edit_distance(a.text, b.text);
  }
  return 0.0;
}

Raster prepare_sample_image(const MiningSample& sample,
                            const MiningConfig& config) {
  if (config.task == TaskKind::Layout) {
    return resize_nearest(sample.image, config.thumbnail_side,
                          config.thumbnail_side);
  }
  ScaledSize size =
      budget_rescale(sample.image.width(), sample.image.height());
  return resize_nearest(sample.image, size.width, size.height);
}

}  // namespace

ConsistencyReport mine(const MiningSample& sample, InferenceBackend& backend,
                       const MiningConfig& config) {
  config.validate();
  ConsistencyReport report;
  report.sample_id = sample.id;
  report.task = config.task;
  report.metric_name = metric_for(config.task);
  report.requested_runs = config.runs_per_sample;

  Raster image = prepare_sample_image(sample, config);
  SamplingParams sampling;
  sampling.temperature = config.temperature;

  std::vector<RunValue> values;
  for (int run = 0; run < config.runs_per_sample; ++run) {
    InferenceRequest req = make_request(
        static_cast<uint64_t>(run) + 1, config.task, image, sampling);
    InferenceResponse resp = backend.infer(req);
    if (!resp.ok) {
      report.run_errors.push_back("run " + std::to_string(run) + ": " +
                                  resp.error_message);
      continue;
    }
    RunValue value;
    std::string error;
    if (!parse_run(config.task, resp.text, value, error)) {
      report.run_errors.push_back("run " + std::to_string(run) +
                                  ": output rejected: " + error);
      continue;
    }
    report.outputs.push_back(resp.text);
    values.push_back(std::move(value));
  }
  report.effective_runs = static_cast<int>(values.size());

  if (report.effective_runs < 2) {
    report.inconclusive = true;
    return report;
  }

  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      report.pairwise.push_back(
          score_pair(config.task, values[i], values[j], config.thumbnail_side));
    }
  }
  double sum = 0.0;
  double low = 1.0;
  for (double s : report.pairwise) {
    sum += s;
    low = std::min(low, s);
  }
  report.score = config.aggregator == ConsistencyAggregator::Mean
                     ? sum / static_cast<double>(report.pairwise.size())
                     : low;
  report.hard_case = report.score < config.threshold;
  return report;
}

std::vector<ConsistencyReport> mine_corpus(
    const std::vector<MiningSample>& samples, InferenceBackend& backend,
    const MiningConfig& config) {
  config.validate();
  std::vector<ConsistencyReport> reports(samples.size());
  parallel_for(samples.size(), config.workers, [&](size_t i) {
    reports[i] = mine(samples[i], backend, config);
  });
  std::sort(reports.begin(), reports.end(),
            [](const ConsistencyReport& a, const ConsistencyReport& b) {
              if (a.inconclusive != b.inconclusive) return b.inconclusive;
              if (a.inconclusive) return a.sample_id < b.sample_id;
              if (a.score != b.score) return a.score < b.score;
              return a.sample_id < b.sample_id;
            });
  return reports;
}

MiningSummary summarize(const std::vector<ConsistencyReport>& reports) {
  MiningSummary summary;
  summary.total = static_cast<int>(reports.size());
  for (const ConsistencyReport& r : reports) {
    if (r.inconclusive) {
      ++summary.inconclusive;
    } else if (r.hard_case) {
      ++summary.hard;
    } else {
      ++summary.easy;
    }
  }
  return summary;
}

std::string report_to_json(const ConsistencyReport& report) {
  nlohmann::ordered_json j;
  j["sample_id"] = report.sample_id;
  j["task"] = task_name(report.task);
  j["metric"] = report.metric_name;
  j["requested_runs"] = report.requested_runs;
  j["effective_runs"] = report.effective_runs;
  j["pairwise"] = report.pairwise;
  j["score"] = report.score;
  j["hard_case"] = report.hard_case;
  j["inconclusive"] = report.inconclusive;
  j["run_errors"] = report.run_errors;
  return j.dump();
}

std::string manifest_to_jsonl(const std::vector<ConsistencyReport>& reports) {
  std::string out;
  for (const ConsistencyReport& r : reports) {
    out += report_to_json(r);
    out += "\n";
  }
  return out;
}

std::string summary_to_json(const MiningSummary& summary,
                            const MiningConfig& config) {
  nlohmann::ordered_json j;
  j["task"] = task_name(config.task);
  j["metric"] = metric_for(config.task);
  j["runs_per_sample"] = config.runs_per_sample;
  j["threshold"] = config.threshold;
  j["aggregator"] =
      config.aggregator == ConsistencyAggregator::Mean ? "mean" : "min";
  j["total"] = summary.total;
  j["hard"] = summary.hard;
  j["easy"] = summary.easy;
  j["inconclusive"] = summary.inconclusive;
  return j.dump(2);
}

}  // namespace docparse
