#include "popdiv/llm_io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "popdiv/io.hpp"

namespace popdiv {

namespace fs = std::filesystem;

std::string_view to_string(BackendKind k) { return k == BackendKind::kHttp ? "http" : "synthetic"; }

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::kHttp;
  if (s == "synthetic") return BackendKind::kSynthetic;
  throw Error(ErrorCode::kInvalidConfig, "unknown backend kind '" + std::string(s) + "'");
}

void BackendConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, "backend: " + m); };
  if (max_concurrency < 1) fail("max_concurrency must be >= 1");
  if (max_retries < 0) fail("max_retries must be >= 0");
  if (!(timeout_s > 0.0)) fail("timeout_s must be positive");
  if (!(default_temperature > 0.0)) fail("default_temperature must be positive");
  if (max_tokens_color < 1 || max_tokens_concept < 1) fail("max_tokens must be >= 1");
  if (backoff_initial_ms < 0 || backoff_max_ms < backoff_initial_ms) fail("backoff bounds are inconsistent");
  if (kind == BackendKind::kHttp) {
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
      fail("base_url must start with http:// or https://");
    }
    if (model_name.empty()) fail("model_name is required for http backends");
  }
}

nlohmann::ordered_json BackendConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["base_url"] = base_url;
  j["model_name"] = model_name;
  j["api_key_env"] = api_key_env;
  j["max_retries"] = max_retries;
  j["timeout_s"] = timeout_s;
  j["max_concurrency"] = max_concurrency;
  j["default_temperature"] = default_temperature;
  j["max_tokens_color"] = max_tokens_color;
  j["max_tokens_concept"] = max_tokens_concept;
  j["backoff_initial_ms"] = backoff_initial_ms;
  j["backoff_max_ms"] = backoff_max_ms;
  return j;
}

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> kKeys{
      "kind", "base_url", "model_name", "api_key_env", "max_retries", "timeout_s", "max_concurrency",
      "default_temperature", "max_tokens_color", "max_tokens_concept", "backoff_initial_ms", "backoff_max_ms"};
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "backend must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw Error(ErrorCode::kInvalidConfig, "backend: unknown key '" + key + "'");
    }
  }
  BackendConfig c;
  try {
    if (j.contains("kind")) c.kind = parse_backend_kind(j.at("kind").get<std::string>());
    c.base_url = j.value("base_url", c.base_url);
    c.model_name = j.value("model_name", c.kind == BackendKind::kHttp ? std::string() : c.model_name);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.default_temperature = j.value("default_temperature", c.default_temperature);
    c.max_tokens_color = j.value("max_tokens_color", c.max_tokens_color);
    c.max_tokens_concept = j.value("max_tokens_concept", c.max_tokens_concept);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.backoff_max_ms = j.value("backoff_max_ms", c.backoff_max_ms);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("backend: ") + e.what());
  }
  c.validate();
  return c;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 digest failed");
  }
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string cache_key(const QueryRecord& r, std::string_view backend_id, std::string_view model) {
  nlohmann::ordered_json j;
  j["backend"] = backend_id;
  j["model"] = model;
  j["temperature"] = r.temperature;
  j["subject_id"] = r.subject_id;
  j["block"] = r.block;
  j["prompt"] = r.query_text;
  return sha256_hex(j.dump());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

GenerationCache::GenerationCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create cache directory " + dir_.string());
}

fs::path GenerationCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<RawGeneration> GenerationCache::get(const std::string& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    RawGeneration g;
    g.key = j.at("key").get<std::string>();
    g.completion = j.at("completion").get<std::string>();
    g.meta = j.value("meta", nlohmann::json::object());
    g.timestamp = g.meta.value("timestamp", std::string());
    if (g.key != key) throw Error(ErrorCode::kSchemaError, "cache entry " + path.string() + " has a foreign key");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, "corrupt cache entry " + path.string() + ": " + e.what());
  }
}

bool GenerationCache::put(const RawGeneration& g, const nlohmann::json& request) {
  const auto path = path_for(g.key);
  std::error_code ec;
  if (fs::exists(path, ec)) return false;
  nlohmann::ordered_json j;
  j["key"] = g.key;
  j["request"] = request;
  j["completion"] = g.completion;
  nlohmann::ordered_json meta = g.meta;
  meta["timestamp"] = g.timestamp;
  j["meta"] = meta;
  write_file_atomic(path, j.dump(2) + "\n");
  return true;
}

nlohmann::ordered_json GenerationError::to_json() const {
  nlohmann::ordered_json j;
  j["index"] = index;
  j["key"] = key;
  j["code"] = to_string(code);
  j["http_status"] = http_status;
  j["message"] = message;
  j["attempts"] = attempts;
  return j;
}

ExecutorOptions ExecutorOptions::from(const BackendConfig& cfg) {
  ExecutorOptions o;
  o.max_concurrency = cfg.max_concurrency;
  o.max_retries = cfg.max_retries;
  o.backoff_initial = std::chrono::milliseconds(cfg.backoff_initial_ms);
  o.backoff_max = std::chrono::milliseconds(cfg.backoff_max_ms);
  return o;
}

ExecutionResult execute_manifest(std::span<const QueryRecord> manifest, Backend& backend, GenerationCache& cache,
                                 const ExecutorOptions& options) {
  ExecutionResult result;
  result.outcomes.resize(manifest.size());
  if (manifest.empty()) return result;

  const auto sleep = options.sleep ? options.sleep
                                   : std::function<void(std::chrono::milliseconds)>(
                                         [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
  const std::string backend_id = backend.id();
  const std::string model = backend.model();

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<std::size_t> hits{0}, calls{0}, fresh{0}, failed{0};
  std::mutex progress_mutex;

  auto run_one = [&](std::size_t i) -> GenerationOutcome {
    const auto& record = manifest[i];
    const std::string key = cache_key(record, backend_id, model);
    if (auto cached = cache.get(key)) {
      ++hits;
      return *cached;
    }
    auto delay = options.backoff_initial;
    for (int attempt = 1;; ++attempt) {
      ++calls;
      try {
        Completion c = backend.complete(record);
        RawGeneration g{key, std::move(c.text), utc_timestamp(), std::move(c.meta)};
        g.meta["attempts"] = attempt;
        g.meta["temperature"] = record.temperature;
        g.meta["model"] = model;
        cache.put(g, backend.request_for(record));
        ++fresh;
        return g;
      } catch (const BackendFailure& f) {
        if (!f.retryable() || attempt > options.max_retries) {
          ++failed;
          return GenerationError{i, key, f.code(), f.http_status(), f.what(), attempt};
        }
      } catch (const Error& e) {
        ++failed;
        return GenerationError{i, key, e.code(), 0, e.what(), attempt};
      }
      sleep(delay);
      delay = std::min(options.backoff_max, delay * 2);
    }
  };

  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      try {
        result.outcomes[i] = run_one(i);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = manifest.size();
        return;
      }
      const std::size_t d = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(d, manifest.size());
      }
    }
  };

  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.max_concurrency)), manifest.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  if (fatal) std::rethrow_exception(fatal);
  result.stats = ExecutionStats{hits.load(), calls.load(), fresh.load(), failed.load()};
  return result;
}

}  // namespace popdiv
