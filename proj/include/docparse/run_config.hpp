#pragma once

#include <string>

#include "docparse/backend.hpp"
#include "docparse/geometry.hpp"

namespace docparse {

// One declarative document for a whole run; command-line flags override
// individual fields after loading.
struct RunConfig {
  // backend
  std::string backend_url;
  std::string mock_script;  // path to a scripted backend; wins over the URL
  std::string api_key_env = "DOCPARSE_API_KEY";
  std::string model = "document-parser";
  int timeout_ms = 60000;
  int max_in_flight = 8;
  RetryPolicy retry;

  // pipeline
  int thumbnail_side = kDefaultThumbnailSide;
  std::string sampling_policy_file;  // empty → compiled-in defaults
  bool include_margins = false;
  std::string math_delimiter = "$$";
  std::string adr_environment = "aligned";

  // mining
  int mine_runs = 3;
  double mine_tau_layout = 0.90;
  double mine_tau_table = 0.90;
  double mine_tau_formula = 0.95;
  double mine_temperature = 0.8;
  std::string mine_aggregator = "mean";

  // cli
  std::string output_dir = "out";
  std::string log_level = "info";

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const std::string& text);

  // Throws std::invalid_argument on bad bounds or missing referenced files.
  void validate() const;

  double mine_tau_for(TaskKind task) const;
};

}  // namespace docparse
