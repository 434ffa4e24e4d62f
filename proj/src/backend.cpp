#include "docparse/backend.hpp"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace docparse {

const char* task_prompt(TaskKind task) {
  switch (task) {
    case TaskKind::Layout:
      return "Layout Detection:";
    case TaskKind::Text:
      return "Text Recognition:";
    case TaskKind::Formula:
      return "Formula Recognition:";
    case TaskKind::Table:
      return "Table Recognition:";
  }
  throw std::logic_error("task_prompt: bad enum value");
}

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Layout:
      return "layout";
    case TaskKind::Text:
      return "text";
    case TaskKind::Formula:
      return "formula";
    case TaskKind::Table:
      return "table";
  }
  throw std::logic_error("task_name: bad enum value");
}

TaskKind task_from_name(const std::string& name) {
  if (name == "layout") return TaskKind::Layout;
  if (name == "text") return TaskKind::Text;
  if (name == "formula") return TaskKind::Formula;
  if (name == "table") return TaskKind::Table;
  throw std::invalid_argument("task_from_name: unknown task '" + name + "'");
}

InferenceRequest make_request(uint64_t id, TaskKind task, Raster image,
                              SamplingParams sampling) {
  InferenceRequest req;
  req.id = id;
  req.task = task;
  req.prompt = task_prompt(task);
  req.image = std::move(image);
  req.sampling = sampling;
  return req;
}

std::string base64_encode(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 3 <= bytes.size()) {
    uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                 static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back(alphabet[v & 63]);
    i += 3;
  }
  size_t rem = bytes.size() - i;
  if (rem == 1) {
    uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out += "==";
  } else if (rem == 2) {
    uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  std::string url = config_.base_url;
  std::string rest;
  if (url.rfind("http://", 0) == 0) {
    rest = url.substr(7);
    port_ = 80;
  } else if (url.rfind("https://", 0) == 0) {
    throw std::invalid_argument("HttpBackend: https URLs are not supported");
  } else {
    rest = url;
  }
  size_t slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  path_prefix_ = slash == std::string::npos ? "" : rest.substr(slash);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') {
    path_prefix_.pop_back();
  }
  size_t colon = hostport.find(':');
  if (colon == std::string::npos) {
    host_ = hostport;
  } else {
    host_ = hostport.substr(0, colon);
    port_ = std::stoi(hostport.substr(colon + 1));
  }
  if (host_.empty()) {
    throw std::invalid_argument("HttpBackend: empty host in base URL");
  }
}

std::string HttpBackend::build_request_body(const InferenceRequest& request,
                                            const std::string& model) {
  nlohmann::ordered_json body;
  body["model"] = model;
  std::string data_uri = "data:image/x-portable-graymap;base64," +
                         base64_encode(encode_pgm_binary(request.image));
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"},
        {"content",
         nlohmann::ordered_json::array(
             {{{"type", "text"}, {"text", request.prompt}},
              {{"type", "image_url"},
               {"image_url", {{"url", data_uri}}}}})}}});
  body["temperature"] = request.sampling.temperature;
  body["frequency_penalty"] = request.sampling.frequency_penalty;
  body["presence_penalty"] = request.sampling.presence_penalty;
  body["max_tokens"] = request.sampling.max_new_tokens;
  return body.dump();
}

InferenceResponse HttpBackend::infer(const InferenceRequest& request) {
  InferenceResponse resp;
  resp.id = request.id;
  auto start = std::chrono::steady_clock::now();

  httplib::Client client(host_, port_);
  client.set_connection_timeout(config_.timeout_ms / 1000,
                                (config_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000,
                          (config_.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string body = build_request_body(request, config_.model);
  auto result = client.Post(path_prefix_ + "/v1/chat/completions", headers,
                            body, "application/json");
  resp.latency_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();

  if (!result) {
    resp.ok = false;
    if (result.error() == httplib::Error::ConnectionTimeout ||
        result.error() == httplib::Error::Read ||
        result.error() == httplib::Error::Write) {
      resp.error_kind = BackendErrorKind::Timeout;
      resp.error_message = "request timed out";
    } else {
      resp.error_kind = BackendErrorKind::ConnectionFailure;
      resp.error_message = "connection failed: " +
                           std::string(httplib::to_string(result.error()));
    }
    return resp;
  }

  resp.status = result->status;
  if (result->status < 200 || result->status >= 300) {
    resp.ok = false;
    resp.error_kind = BackendErrorKind::ServerError;
    resp.error_message =
        "server returned status " + std::to_string(result->status);
    return resp;
  }

  try {
    nlohmann::json j = nlohmann::json::parse(result->body);
    resp.text = j.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    if (j.contains("usage")) {
      resp.prompt_tokens = j["usage"].value("prompt_tokens", -1);
      resp.completion_tokens = j["usage"].value("completion_tokens", -1);
    }
    resp.ok = true;
  } catch (const std::exception& err) {
    resp.ok = false;
    resp.error_kind = BackendErrorKind::ServerError;
    resp.error_message = std::string("malformed completion body: ") +
                         err.what();
  }
  return resp;
}

// ---------------------------------------------------------------------------
// MockBackend

namespace {

std::string entry_key(TaskKind task, const std::string& fingerprint_hex) {
  return std::string(task_name(task)) + "/" + fingerprint_hex;
}

// Deterministic per-request jitter: splitmix64 over (seed ^ id).
uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

MockBackend MockBackend::from_json(const std::string& text) {
  MockBackend backend;
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.contains("jitter")) {
    backend.set_latency_jitter(j["jitter"].value("seed", 0ULL),
                               j["jitter"].value("max_ms", 0));
  }
  for (const auto& e : j.value("entries", nlohmann::json::array())) {
    TaskKind task = task_from_name(e.at("task").get<std::string>());
    std::string fp = e.value("fingerprint", "*");
    std::vector<std::string> responses;
    for (const auto& r : e.at("responses")) {
      responses.push_back(r.get<std::string>());
    }
    if (responses.empty()) {
      throw std::invalid_argument("mock script: entry with no responses");
    }
    backend.add_entry(task, fp, std::move(responses));
  }
  return backend;
}

MockBackend MockBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mock script: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void MockBackend::add_entry(TaskKind task, const std::string& fingerprint_hex,
                            std::vector<std::string> responses) {
  Entry entry;
  entry.responses = std::move(responses);
  entries_[entry_key(task, fingerprint_hex)] = std::move(entry);
}

void MockBackend::set_latency_jitter(uint64_t seed, int max_ms) {
  jitter_seed_ = seed;
  jitter_max_ms_ = max_ms;
}

InferenceResponse MockBackend::infer(const InferenceRequest& request) {
  calls_->fetch_add(1);
  InferenceResponse resp;
  resp.id = request.id;

  if (jitter_max_ms_ > 0) {
    uint64_t h = mix64(jitter_seed_ ^ request.id);
    int delay = static_cast<int>(h % (static_cast<uint64_t>(jitter_max_ms_) + 1));
    resp.latency_ms = delay;
    if (sleep_for_jitter_ && delay > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }

  std::string fp = fingerprint_hex(request.image);
  auto it = entries_.find(entry_key(request.task, fp));
  if (it == entries_.end()) {
    it = entries_.find(entry_key(request.task, "*"));
  }
  if (it == entries_.end()) {
    resp.ok = false;
    resp.error_kind = BackendErrorKind::ServerError;
    resp.status = 404;
    resp.error_message = "no scripted response for task " +
                         std::string(task_name(request.task)) +
                         " fingerprint " + fp;
    return resp;
  }
  uint64_t n = it->second.counter->fetch_add(1);
  const std::string& text =
      it->second.responses[n % it->second.responses.size()];
  resp.ok = true;
  resp.text = text;
  resp.status = 200;
  resp.prompt_tokens = static_cast<int>(request.prompt.size() / 4) + 1;
  resp.completion_tokens = static_cast<int>(text.size() / 4) + 1;
  return resp;
}

// ---------------------------------------------------------------------------
// BatchClient

bool retryable(BackendErrorKind kind, int status) {
  switch (kind) {
    case BackendErrorKind::Timeout:
    case BackendErrorKind::ConnectionFailure:
      return true;
    case BackendErrorKind::ServerError:
      return status >= 500 || status == 0;
    case BackendErrorKind::None:
      return false;
  }
  return false;
}

// Counting gate; std::counting_semaphore needs a compile-time ceiling, so
// wrap a condition variable instead.
class Gate {
 public:
  explicit Gate(int slots) : slots_(slots) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int slots_;
};

BatchClient::BatchClient(InferenceBackend& backend, int max_in_flight,
                         RetryPolicy retry)
    : backend_(backend),
      max_in_flight_(max_in_flight),
      retry_(retry),
      gate_(std::make_unique<Gate>(max_in_flight)) {
  if (max_in_flight < 1) {
    throw std::invalid_argument("BatchClient: in-flight bound must be >= 1");
  }
}

BatchClient::~BatchClient() = default;

InferenceResponse BatchClient::call(const InferenceRequest& request) {
  InferenceResponse resp;
  int delay_ms = retry_.base_delay_ms;
  for (int attempt = 0; ; ++attempt) {
    gate_->acquire();
    resp = backend_.infer(request);
    gate_->release();
    if (resp.ok || attempt >= retry_.max_retries ||
        !retryable(resp.error_kind, resp.status)) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    delay_ms = static_cast<int>(delay_ms * retry_.factor);
  }
  resp.id = request.id;
  return resp;
}

std::vector<InferenceResponse> BatchClient::run(
    const std::vector<InferenceRequest>& requests,
    const std::function<void(const InferenceResponse&)>& on_response) {
  std::vector<InferenceResponse> out;
  out.reserve(requests.size());
  std::mutex out_mu;
  std::atomic<size_t> next{0};

  int workers = std::min<int>(max_in_flight_,
                              static_cast<int>(requests.size()));
  workers = std::max(workers, 1);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= requests.size()) break;
        InferenceResponse resp = call(requests[i]);
        std::lock_guard<std::mutex> lock(out_mu);
        if (on_response) on_response(resp);
        out.push_back(std::move(resp));
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return out;
}

ThroughputReport throughput_report(
    const std::vector<std::pair<TaskKind, InferenceResponse>>& responses,
    int pages, double wall_time_sec) {
  if (responses.empty() || wall_time_sec <= 0.0) {
    throw std::invalid_argument("throughput_report: nothing to report");
  }
  long long stage2_tokens = 0;
  for (const auto& [task, resp] : responses) {
    if (task == TaskKind::Layout || !resp.ok) continue;
    if (resp.completion_tokens > 0) stage2_tokens += resp.completion_tokens;
  }
  ThroughputReport report;
  report.pages_per_sec = pages / wall_time_sec;
  report.tokens_per_sec = stage2_tokens / wall_time_sec;
  return report;
}

}  // namespace docparse
