#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdiv/error.hpp"
#include "popdiv/popsim.hpp"

namespace popdiv {

enum class BackendKind { kHttp, kSynthetic };

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::kSynthetic;
  std::string base_url = "http://localhost:8000";
  std::string model_name = "synthetic";
  std::string api_key_env;  // empty: send no Authorization header
  int max_retries = 4;
  double timeout_s = 60.0;
  int max_concurrency = 4;
  double default_temperature = 1.0;  // t0
  int max_tokens_color = 64;
  int max_tokens_concept = 16;
  int backoff_initial_ms = 500;
  int backoff_max_ms = 20000;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

struct Completion {
  std::string text;
  nlohmann::json meta = nlohmann::json::object();
};

/// A failed backend call. Retryable failures (rate limits, 5xx, transport
/// errors) are retried by the executor with capped exponential backoff.
class BackendFailure : public Error {
 public:
  BackendFailure(ErrorCode code, const std::string& message, bool retryable, int http_status = 0)
      : Error(code, message), retryable_(retryable), http_status_(http_status) {}

  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

/// Text-generation backend. complete() is called concurrently from executor
/// workers and must be thread-safe.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Stable identity folded into cache keys, e.g. "http:<url>".
  virtual std::string id() const = 0;
  virtual std::string model() const = 0;

  /// Request body as sent (or, for synthetic backends, as described).
  virtual nlohmann::json request_for(const QueryRecord& r) const = 0;

  virtual Completion complete(const QueryRecord& r) = 0;
};

/// SHA-256 (lowercase hex) of the canonical JSON of (backend id, model,
/// temperature, subject id, block, prompt).
///
/// The subject id acts as the sampling nonce: subjects that share a prompt
/// (condition "none") must still be sampled independently.
std::string cache_key(const QueryRecord& r, std::string_view backend_id, std::string_view model);

std::string sha256_hex(std::string_view data);

struct RawGeneration {
  std::string key;
  std::string completion;
  std::string timestamp;  // ISO-8601 UTC
  nlohmann::json meta = nlohmann::json::object();
};

/// Append-only, content-addressed directory of `<key[0:2]>/<key>.json`
/// files holding {key, request, completion, meta}. Writes are atomic
/// (temp file + rename); an existing entry is never replaced.
class GenerationCache {
 public:
  explicit GenerationCache(std::filesystem::path dir);

  std::optional<RawGeneration> get(const std::string& key) const;

  /// Returns false (and leaves the entry untouched) if the key exists.
  bool put(const RawGeneration& g, const nlohmann::json& request);

  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct GenerationError {
  std::size_t index = 0;  // manifest position
  std::string key;
  ErrorCode code = ErrorCode::kBackendUnreachable;
  int http_status = 0;
  std::string message;
  int attempts = 0;

  nlohmann::ordered_json to_json() const;
};

using GenerationOutcome = std::variant<RawGeneration, GenerationError>;

struct ExecutorOptions {
  int max_concurrency = 1;
  int max_retries = 4;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{20000};
  std::function<void(std::size_t done, std::size_t total)> progress;
  /// Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  static ExecutorOptions from(const BackendConfig& cfg);
};

struct ExecutionStats {
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;  // including retries
  std::size_t fresh = 0;
  std::size_t failed = 0;
};

struct ExecutionResult {
  std::vector<GenerationOutcome> outcomes;  // manifest order
  ExecutionStats stats;
};

/// Runs every record once: cache hit, fresh generation (then cached), or an
/// error record after the retry budget is spent. At most
/// options.max_concurrency backend calls are in flight.
ExecutionResult execute_manifest(std::span<const QueryRecord> manifest, Backend& backend, GenerationCache& cache,
                                 const ExecutorOptions& options);

/// OpenAI-compatible `POST .../v1/chat/completions` with one user message.
class HttpBackend : public Backend {
 public:
  /// Throws AuthMissing if cfg.api_key_env names an unset variable.
  explicit HttpBackend(BackendConfig cfg);

  std::string id() const override;
  std::string model() const override { return cfg_.model_name; }
  nlohmann::json request_for(const QueryRecord& r) const override;
  Completion complete(const QueryRecord& r) override;

  /// Path the request is POSTed to: base URL path + "/v1/chat/completions",
  /// or + "/chat/completions" when the base URL already ends in "/v1".
  const std::string& endpoint_path() const { return path_; }

 private:
  BackendConfig cfg_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

/// Identity HttpBackend reports for `cfg`, computable without credentials.
std::string http_backend_id(const BackendConfig& cfg);

/// Extracts choices[0].message.content; throws PermanentHttpError otherwise.
std::string parse_chat_completion(const nlohmann::json& body);

std::string utc_timestamp();

}  // namespace popdiv
