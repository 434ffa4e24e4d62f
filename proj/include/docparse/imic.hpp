#pragma once

#include <optional>
#include <string>
#include <vector>

#include "docparse/backend.hpp"
#include "docparse/layout.hpp"
#include "docparse/raster.hpp"

namespace docparse {

enum class ConsistencyAggregator { Mean, Min };

struct MiningConfig {
  TaskKind task = TaskKind::Layout;
  int runs_per_sample = 3;       // k, must be >= 2
  double threshold = 0.9;        // tau
  double temperature = 0.8;      // stochastic sampling for the repeat runs
  ConsistencyAggregator aggregator = ConsistencyAggregator::Mean;
  int thumbnail_side = kDefaultThumbnailSide;  // layout scoring raster
  int workers = 4;               // concurrent samples

  void validate() const;
};

struct MiningSample {
  std::string id;
  Raster image;
};

struct ConsistencyReport {
  std::string sample_id;
  TaskKind task = TaskKind::Layout;
  std::string metric_name;
  int requested_runs = 0;
  int effective_runs = 0;            // successful runs
  std::vector<std::string> outputs;  // raw text of successful runs
  std::vector<std::string> run_errors;
  std::vector<double> pairwise;      // k_eff choose 2, (i<j) order
  double score = 0.0;                // aggregated pairwise consistency
  bool hard_case = false;            // score < tau (when conclusive)
  bool inconclusive = false;         // fewer than 2 usable runs
};

struct MiningSummary {
  int total = 0;
  int hard = 0;
  int easy = 0;
  int inconclusive = 0;
};

// Pairwise consistency scorers, one per task. Layout compares coverage of
// the parsed boxes on the square scoring raster; tables compare the trees
// decoded from the two structure strings (a string that fails structure
// validation fails its run before pairing); formulas compare token-level.
double layout_consistency(const std::vector<LayoutElement>& a,
                          const std::vector<LayoutElement>& b, int side);

// Runs one sample k times and scores all output pairs. The image is
// prepared per task exactly like the parsing pipeline would prepare it
// (layout → square thumbnail; table/formula → budgeted native crop).
ConsistencyReport mine(const MiningSample& sample, InferenceBackend& backend,
                       const MiningConfig& config);

// Mines every sample (samples run concurrently, the runs within one sample
// sequentially, so scripted response cycles stay per-sample). The manifest
// is sorted hardest first: ascending score, ties by id, inconclusive last.
std::vector<ConsistencyReport> mine_corpus(const std::vector<MiningSample>& samples,
                                           InferenceBackend& backend,
                                           const MiningConfig& config);

MiningSummary summarize(const std::vector<ConsistencyReport>& reports);

std::string report_to_json(const ConsistencyReport& report);
std::string manifest_to_jsonl(const std::vector<ConsistencyReport>& reports);
std::string summary_to_json(const MiningSummary& summary,
                            const MiningConfig& config);

}  // namespace docparse
