// SPDX-License-Identifier: Apache-2.0
#include "minagent/llm_backend.hpp"

#include <httplib.h>

#include <thread>

#include "minagent/digest.hpp"
#include "minagent/trajectory.hpp"

namespace minagent {
namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string body_excerpt(const std::string& body) {
  return body.size() <= 200 ? body : body.substr(0, 200) + "...";
}

}  // namespace

std::string request_digest(const ChatRequest& request) {
  return sha256_hex(canonical_json(encode_request(request)));
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw std::invalid_argument("base_url must be non-empty");
  if (config_.timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
  if (config_.retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (static_cast<int>(config_.retry.backoff.size()) < config_.retry.max_attempts - 1) {
    throw std::invalid_argument("backoff list shorter than max_attempts - 1");
  }
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme_end = url.find("://");
  auto authority_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', authority_start);
  if (path_start == std::string::npos) {
    host_ = url;
    path_prefix_.clear();
  } else {
    host_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
  }
  sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

BackendResult HttpBackend::complete(const ChatRequest& request) {
  const std::string body = encode_request(request);
  const std::string path = path_prefix_ + "/chat/completions";
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

  std::string last_cause;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout.count(), 0);
    client.set_read_timeout(config_.timeout.count(), 0);
    client.set_write_timeout(config_.timeout.count(), 0);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_cause = "network error: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        ChatResponse decoded = decode_response(res->body);
        return {std::move(decoded), res->body};
      } catch (const DecodeError& ex) {
        throw BackendError(BackendError::Kind::Decode,
                           std::string("decode failure: ") + ex.what(), res->status, attempt);
      }
    } else if (retryable_status(res->status)) {
      last_cause = "http status " + std::to_string(res->status);
    } else {
      throw BackendError(BackendError::Kind::Terminal,
                         "terminal http status " + std::to_string(res->status) + ": " +
                             body_excerpt(res->body),
                         res->status, attempt);
    }
    if (attempt < config_.retry.max_attempts) {
      sleep_(config_.retry.backoff[static_cast<std::size_t>(attempt - 1)]);
    }
  }
  throw BackendError(BackendError::Kind::Exhausted,
                     "retries exhausted after " + std::to_string(config_.retry.max_attempts) +
                         " attempts: " + last_cause,
                     0, config_.retry.max_attempts);
}

ReplayBackend::ReplayBackend(std::vector<ReplayEvent> events) : events_(std::move(events)) {
  if (events_.empty()) throw std::invalid_argument("replay source must be non-empty");
}

ReplayBackend ReplayBackend::from_trajectory(const std::filesystem::path& file) {
  auto events = read_trajectory(file);
  std::vector<ReplayEvent> replay;
  std::string pending_request_body;
  bool have_request = false;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& event = events[i];
    if (event.kind == EventKind::Request) {
      if (!event.payload.contains("body") || !event.payload["body"].is_string()) {
        throw MalformedStreamError(i + 1, "request event without body");
      }
      pending_request_body = event.payload["body"].get<std::string>();
      have_request = true;
    } else if (event.kind == EventKind::Response) {
      if (!have_request) throw MalformedStreamError(i + 1, "response event without a request");
      if (!event.payload.contains("body") || !event.payload["body"].is_string()) {
        throw MalformedStreamError(i + 1, "response event without body");
      }
      replay.push_back({sha256_hex(canonical_json(pending_request_body)),
                        event.payload["body"].get<std::string>()});
      have_request = false;
    }
  }
  return ReplayBackend(std::move(replay));
}

BackendResult ReplayBackend::complete(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  if (cursor_ >= events_.size()) {
    throw BackendError(BackendError::Kind::ReplayExhausted,
                       "replay exhausted after " + std::to_string(events_.size()) + " events");
  }
  const ReplayEvent& event = events_[cursor_];
  if (!event.request_digest.empty()) {
    std::string actual = request_digest(request);
    if (actual != event.request_digest) {
      throw BackendError(BackendError::Kind::ReplayMismatch,
                         "replay mismatch at position " + std::to_string(cursor_) +
                             ": expected digest " + event.request_digest + ", got " + actual);
    }
  }
  ++cursor_;
  ChatResponse decoded = decode_response(event.response_body);
  return {std::move(decoded), event.response_body};
}

std::size_t ReplayBackend::remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_.size() - cursor_;
}

}  // namespace minagent
