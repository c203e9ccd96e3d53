#include <httplib.h>

#include <cstdlib>

#include "popdiv/llm_io.hpp"

namespace popdiv {

namespace {

// "http://host:8000/v1" -> {"http://host:8000", "/v1"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::pair<std::string, std::string> endpoint_of(const std::string& base_url) {
  auto [origin, path] = split_url(base_url);
  path += ends_with(path, "/v1") ? "/chat/completions" : "/v1/chat/completions";
  return {origin, path};
}

}  // namespace

std::string http_backend_id(const BackendConfig& cfg) {
  const auto [origin, path] = endpoint_of(cfg.base_url);
  return "http:" + origin + path;
}

std::string parse_chat_completion(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw BackendFailure(ErrorCode::kPermanentHttpError, "response has no choices", false);
  }
  const auto& choice = body["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    throw BackendFailure(ErrorCode::kPermanentHttpError, "response choice has no message content", false);
  }
  return choice["message"]["content"].get<std::string>();
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::tie(origin_, path_) = endpoint_of(cfg_.base_url);
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::kAuthMissing, "environment variable " + cfg_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpBackend::id() const { return "http:" + origin_ + path_; }

nlohmann::json HttpBackend::request_for(const QueryRecord& r) const {
  return nlohmann::json{
      {"model", cfg_.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", r.query_text}}})},
      {"temperature", r.temperature},
      {"max_tokens", r.domain == Domain::kColor ? cfg_.max_tokens_color : cfg_.max_tokens_concept},
  };
}

Completion HttpBackend::complete(const QueryRecord& r) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto res = client.Post(path_, headers, request_for(r).dump(), "application/json");
  if (!res) {
    throw BackendFailure(ErrorCode::kBackendUnreachable,
                         origin_ + ": " + httplib::to_string(res.error()), true);
  }
  const int status = res->status;
  if (status == 429) throw BackendFailure(ErrorCode::kRateLimited, "HTTP 429", true, status);
  if (status >= 500) {
    throw BackendFailure(ErrorCode::kPermanentHttpError, "HTTP " + std::to_string(status), true, status);
  }
  if (status == 401 || status == 403) {
    throw BackendFailure(ErrorCode::kAuthMissing, "HTTP " + std::to_string(status) + ": " + res->body, false,
                         status);
  }
  if (status < 200 || status >= 300) {
    throw BackendFailure(ErrorCode::kPermanentHttpError, "HTTP " + std::to_string(status) + ": " + res->body,
                         false, status);
  }

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendFailure(ErrorCode::kPermanentHttpError, std::string("malformed JSON body: ") + e.what(), false,
                         status);
  }
  Completion c;
  c.text = parse_chat_completion(body);
  if (body.contains("usage") && body["usage"].is_object()) c.meta["usage"] = body["usage"];
  if (body.contains("model")) c.meta["served_model"] = body["model"];
  return c;
}

}  // namespace popdiv
