#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "docparse/raster.hpp"

namespace docparse {

enum class TaskKind { Layout, Text, Formula, Table };

// The fixed instruction string each task is invoked with.
const char* task_prompt(TaskKind task);
const char* task_name(TaskKind task);
TaskKind task_from_name(const std::string& name);

struct SamplingParams {
  double temperature = 0.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  int max_new_tokens = 4096;
};

struct InferenceRequest {
  uint64_t id = 0;
  TaskKind task = TaskKind::Text;
  std::string prompt;  // must equal task_prompt(task)
  Raster image;
  SamplingParams sampling;
};

InferenceRequest make_request(uint64_t id, TaskKind task, Raster image,
                              SamplingParams sampling = {});

enum class BackendErrorKind { None, Timeout, ConnectionFailure, ServerError };

struct InferenceResponse {
  uint64_t id = 0;
  bool ok = false;
  std::string text;
  BackendErrorKind error_kind = BackendErrorKind::None;
  std::string error_message;
  int status = 0;            // HTTP status when applicable
  double latency_ms = 0.0;
  int prompt_tokens = -1;    // -1 when the server does not report usage
  int completion_tokens = -1;
};

// Blocking, thread-safe inference boundary. One call, one response; retry
// and concurrency policy live in BatchClient, not here.
class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  virtual InferenceResponse infer(const InferenceRequest& request) = 0;
};

struct HttpBackendConfig {
  std::string base_url;        // e.g. http://host:8000
  std::string api_key;         // empty → no Authorization header
  std::string model = "document-parser";
  int timeout_ms = 60000;
};

// OpenAI-compatible chat-completions client: one user message holding the
// prompt text plus the crop as a base64 data URI image attachment.
class HttpBackend : public InferenceBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  InferenceResponse infer(const InferenceRequest& request) override;

  static std::string build_request_body(const InferenceRequest& request,
                                        const std::string& model);

 private:
  HttpBackendConfig config_;
  std::string host_;
  int port_ = 80;
  std::string path_prefix_;
};

// Deterministic scripted backend. Responses are keyed by (task, image
// fingerprint); a "*" fingerprint is the task's fallback. An entry's
// response list cycles per call, which is how repeated stochastic runs
// are simulated. Optional latency jitter is a pure function of the
// request id, so concurrency never perturbs it.
class MockBackend : public InferenceBackend {
 public:
  static MockBackend from_json(const std::string& text);
  static MockBackend from_file(const std::string& path);

  MockBackend() = default;

  void add_entry(TaskKind task, const std::string& fingerprint_hex,
                 std::vector<std::string> responses);
  void set_latency_jitter(uint64_t seed, int max_ms);
  // Simulated latency is recorded on responses but the call does not
  // actually sleep unless wall-clock shuffling is requested.
  void set_sleep_for_jitter(bool sleep) { sleep_for_jitter_ = sleep; }

  InferenceResponse infer(const InferenceRequest& request) override;

  int calls() const { return calls_->load(); }

 private:
  struct Entry {
    std::vector<std::string> responses;
    std::unique_ptr<std::atomic<uint64_t>> counter =
        std::make_unique<std::atomic<uint64_t>>(0);
  };

  std::unordered_map<std::string, Entry> entries_;
  uint64_t jitter_seed_ = 0;
  int jitter_max_ms_ = 0;
  bool sleep_for_jitter_ = true;
  std::unique_ptr<std::atomic<int>> calls_ =
      std::make_unique<std::atomic<int>>(0);
};

struct RetryPolicy {
  int max_retries = 3;       // additional attempts after the first
  int base_delay_ms = 250;
  double factor = 2.0;
};

// Shared front door for all inference traffic: enforces a global in-flight
// bound, retries transient failures (timeouts, connection failures, 5xx)
// with exponential backoff, and returns exactly one terminal outcome per
// request id.
class BatchClient {
 public:
  BatchClient(InferenceBackend& backend, int max_in_flight,
              RetryPolicy retry = {});
  ~BatchClient();

  // Blocking single call; safe from any thread.
  InferenceResponse call(const InferenceRequest& request);

  // Runs the whole batch with up to max_in_flight concurrent requests;
  // the returned vector is in completion order. on_response, when given,
  // is invoked serially as responses arrive.
  std::vector<InferenceResponse> run(
      const std::vector<InferenceRequest>& requests,
      const std::function<void(const InferenceResponse&)>& on_response = {});

 private:
  InferenceBackend& backend_;
  int max_in_flight_;
  RetryPolicy retry_;
  std::unique_ptr<class Gate> gate_;
};

bool retryable(BackendErrorKind kind, int status);

struct ThroughputReport {
  double pages_per_sec = 0.0;
  double tokens_per_sec = 0.0;
};

// tokens_per_sec counts completion tokens of second-stage (non-layout)
// responses only; both rates divide by the same two-stage wall time.
ThroughputReport throughput_report(
    const std::vector<std::pair<TaskKind, InferenceResponse>>& responses,
    int pages, double wall_time_sec);

std::string base64_encode(const std::string& bytes);

}  // namespace docparse
