#include "docparse/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace docparse {

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

RunConfig RunConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(std::string("config JSON: ") + err.what());
  }
  RunConfig c;
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    c.backend_url = b.value("url", c.backend_url);
    c.mock_script = b.value("mock_script", c.mock_script);
    c.api_key_env = b.value("api_key_env", c.api_key_env);
    c.model = b.value("model", c.model);
    c.timeout_ms = b.value("timeout_ms", c.timeout_ms);
    c.max_in_flight = b.value("max_in_flight", c.max_in_flight);
    if (b.contains("retry")) {
      const auto& r = b["retry"];
      c.retry.max_retries = r.value("max_retries", c.retry.max_retries);
      c.retry.base_delay_ms = r.value("base_delay_ms", c.retry.base_delay_ms);
      c.retry.factor = r.value("factor", c.retry.factor);
    }
  }
  if (j.contains("pipeline")) {
    const auto& p = j["pipeline"];
    c.thumbnail_side = p.value("thumbnail_side", c.thumbnail_side);
    c.sampling_policy_file =
        p.value("sampling_policy", c.sampling_policy_file);
    c.include_margins = p.value("include_margins", c.include_margins);
    c.math_delimiter = p.value("math_delimiter", c.math_delimiter);
    c.adr_environment = p.value("adr_environment", c.adr_environment);
  }
  if (j.contains("imic")) {
    const auto& m = j["imic"];
    c.mine_runs = m.value("runs_per_sample", c.mine_runs);
    if (m.contains("threshold")) {
      const auto& t = m["threshold"];
      c.mine_tau_layout = t.value("layout", c.mine_tau_layout);
      c.mine_tau_table = t.value("table", c.mine_tau_table);
      c.mine_tau_formula = t.value("formula", c.mine_tau_formula);
    }
    c.mine_temperature = m.value("temperature", c.mine_temperature);
    c.mine_aggregator = m.value("aggregator", c.mine_aggregator);
  }
  if (j.contains("cli")) {
    const auto& l = j["cli"];
    c.output_dir = l.value("output_dir", c.output_dir);
    c.log_level = l.value("log_level", c.log_level);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (thumbnail_side <= 0) {
    throw std::invalid_argument("config: thumbnail_side must be positive");
  }
  if (max_in_flight < 1) {
    throw std::invalid_argument("config: max_in_flight must be >= 1");
  }
  if (timeout_ms <= 0) {
    throw std::invalid_argument("config: timeout_ms must be positive");
  }
  if (retry.max_retries < 0 || retry.base_delay_ms < 0 ||
      retry.factor < 1.0) {
    throw std::invalid_argument("config: bad retry policy");
  }
  if (mine_runs < 2) {
    throw std::invalid_argument("config: runs_per_sample must be >= 2");
  }
  for (double tau : {mine_tau_layout, mine_tau_table, mine_tau_formula}) {
    if (tau < 0.0 || tau > 1.0) {
      throw std::invalid_argument("config: threshold outside [0,1]");
    }
  }
  if (mine_aggregator != "mean" && mine_aggregator != "min") {
    throw std::invalid_argument("config: aggregator must be mean or min");
  }
  if (adr_environment != "aligned" && adr_environment != "align" &&
      adr_environment != "newline") {
    throw std::invalid_argument(
        "config: adr_environment must be aligned, align, or newline");
  }
  if (math_delimiter != "$$" && math_delimiter != "brackets") {
    throw std::invalid_argument("config: math_delimiter must be $$ or brackets");
  }
  for (const std::string& path : {mock_script, sampling_policy_file}) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      throw std::invalid_argument("config: referenced file missing: " + path);
    }
  }
}

double RunConfig::mine_tau_for(TaskKind task) const {
  switch (task) {
    case TaskKind::Layout:
      return mine_tau_layout;
    case TaskKind::Table:
      return mine_tau_table;
    case TaskKind::Formula:
    case TaskKind::Text:
      return mine_tau_formula;
  }
  return mine_tau_layout;
}

}  // namespace docparse
