// SPDX-License-Identifier: Apache-2.0
#include "minagent/mock_server.hpp"

#include <httplib.h>

#include <fstream>
#include <mutex>
#include <thread>

namespace minagent {
namespace {

using nlohmann::json;

// One reply slot after repeat expansion.
struct Resolved {
  const ScriptStep* step;
};

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

Script Script::parse(const json& document) {
  if (!document.is_object()) throw ScriptError("script must be an object");
  Script script;
  if (document.contains("on_exhausted")) {
    const json& oe = document["on_exhausted"];
    if (oe.is_string() && oe == "error_500") {
      script.on_exhausted = OnExhausted::Error500;
    } else if (oe.is_object() && oe.contains("final_stop") && oe["final_stop"].is_string()) {
      script.on_exhausted = OnExhausted::FinalStop;
      script.final_stop_text = oe["final_stop"].get<std::string>();
    } else {
      throw ScriptError("on_exhausted must be \"error_500\" or {\"final_stop\": text}");
    }
  }
  if (document.contains("steps")) {
    if (!document["steps"].is_array()) throw ScriptError("steps must be an array");
    for (const json& s : document["steps"]) {
      if (!s.is_object()) throw ScriptError("each step must be an object");
      ScriptStep step;
      step.repeat = s.value("repeat", 1);
      if (step.repeat < 1) throw ScriptError("step repeat must be >= 1");
      if (s.contains("response")) {
        if (!s["response"].is_object()) throw ScriptError("step response must be an object");
        step.response = s["response"];
      } else if (s.contains("status")) {
        if (!s["status"].is_number_integer()) throw ScriptError("step status must be an integer");
        step.status = s["status"].get<int>();
        if (step.status < 100 || step.status > 599) throw ScriptError("step status out of range");
        step.body = s.value("body", "");
      } else {
        throw ScriptError("step needs either response or status");
      }
      script.steps.push_back(std::move(step));
    }
  }
  if (script.steps.empty() && script.on_exhausted == OnExhausted::Error500) {
    throw ScriptError("empty script requires on_exhausted final_stop");
  }
  return script;
}

Script Script::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw ScriptError("cannot open script: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ScriptError("parse error at line " + std::to_string(line_of_offset(text, ex.byte)) +
                      " of " + path.string() + ": " + ex.what());
  }
  return parse(document);
}

struct MockServer::Impl {
  Script script;
  std::vector<Resolved> expanded;
  httplib::Server server;
  std::thread worker;
  mutable std::mutex mu;
  RequestLog log;
  std::size_t cursor = 0;
  int port = -1;
  bool running = false;

  explicit Impl(Script s) : script(std::move(s)) {
    for (const auto& step : script.steps) {
      for (int i = 0; i < step.repeat; ++i) expanded.push_back({&step});
    }
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mu);
    RequestLogEntry entry;
    entry.index = log.entries.size();
    entry.body = req.body;
    entry.authorization = req.get_header_value("Authorization");
    try {
      entry.request = decode_request(req.body);
    } catch (const DecodeError& ex) {
      entry.decode_error = ex.what();
    }
    json requested = json::object();
    if (entry.request) requested["model"] = entry.request->model;
    log.entries.push_back(std::move(entry));

    if (cursor < expanded.size()) {
      const ScriptStep* step = expanded[cursor++].step;
      if (step->response) {
        res.status = 200;
        res.set_content(step->response->dump(), "application/json");
      } else {
        res.status = step->status;
        res.set_content(step->body, "text/plain");
      }
      return;
    }
    if (script.on_exhausted == Script::OnExhausted::FinalStop) {
      json body = {{"model", requested.value("model", "mock")},
                   {"choices", json::array({json{
                                    {"message", {{"role", "assistant"},
                                                 {"content", script.final_stop_text}}},
                                    {"finish_reason", "stop"}}})}};
      res.status = 200;
      res.set_content(body.dump(), "application/json");
    } else {
      res.status = 500;
      res.set_content("script exhausted", "text/plain");
    }
  }
};

MockServer::MockServer(Script script) : impl_(std::make_unique<Impl>(std::move(script))) {}

MockServer::~MockServer() { stop(); }

int MockServer::start(int port) {
  impl_->server.Post("/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                       impl_->handle(req, res);
                     });
  int bound;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port("127.0.0.1");
    if (bound <= 0) throw BindError("cannot bind 127.0.0.1 to an ephemeral port");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw BindError("cannot bind 127.0.0.1:" + std::to_string(port));
    }
    bound = port;
  }
  impl_->port = bound;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->running = true;
  return bound;
}

RequestLog MockServer::stop() {
  if (impl_->running) {
    impl_->server.stop();
    impl_->running = false;
  }
  if (impl_->worker.joinable()) impl_->worker.join();
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->log;
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

RequestLog MockServer::snapshot_log() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->log;
}

}  // namespace minagent
