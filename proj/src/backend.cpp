#include "teforge/backend.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef TEFORGE_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace teforge {

TranscriptWriter::TranscriptWriter(std::string dir) : dir_(std::move(dir)) {
  ensure_dir(dir_);
}

void TranscriptWriter::record(const std::string& backend_id, const PromptBundle& prompt,
                              const std::string& response, const std::string& error,
                              bool timestamps) {
  std::lock_guard<std::mutex> lock(mutex_);
  int seq = sequence_++;
  json entry = {{"sequence", seq},
                {"backend", backend_id},
                {"template_id", prompt.template_id},
                {"request", prompt.to_json()},
                {"response", response},
                {"error", error}};
  if (timestamps) {
    entry["timestamp_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
  } else {
    entry["timestamp_ms"] = nullptr;
  }
  char name[32];
  std::snprintf(name, sizeof(name), "call_%06d.json", seq);
  write_json_file(dir_ + "/" + name, entry);
}

int TranscriptWriter::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sequence_;
}

Script Script::from_json(const json& j) {
  Script s;
  for (const auto& e : j.at("entries"))
    s.entries.push_back({e.at("match").get<std::string>(), e.at("response").get<std::string>()});
  const std::string policy = j.value("exhaustion", std::string{"repeat_last"});
  if (policy == "repeat_last") {
    s.policy = Exhaustion::repeat_last;
  } else if (policy == "error") {
    s.policy = Exhaustion::error;
  } else {
    throw ConfigError("unknown script exhaustion policy: " + policy);
  }
  return s;
}

Script Script::from_file(const std::string& path) { return from_json(load_json_file(path)); }

json Script::to_json() const {
  json out = json::array();
  for (const Entry& e : entries) out.push_back({{"match", e.match}, {"response", e.response}});
  return {{"entries", out},
          {"exhaustion", policy == Exhaustion::repeat_last ? "repeat_last" : "error"}};
}

std::string scripted_generate(const Script& script, std::vector<bool>& consumed,
                              const PromptBundle& prompt) {
  if (script.entries.empty()) throw BackendError("script has no entries");
  consumed.resize(script.entries.size(), false);
  const std::string rendered = prompt.render();

  auto matches = [&](const Script::Entry& e) {
    return e.match == prompt.template_id || rendered.find(e.match) != std::string::npos;
  };

  int last_match = -1;
  for (size_t i = 0; i < script.entries.size(); ++i) {
    if (!matches(script.entries[i])) continue;
    last_match = static_cast<int>(i);
    if (!consumed[i]) {
      consumed[i] = true;
      return script.entries[i].response;
    }
  }
  if (last_match >= 0 && script.policy == Script::Exhaustion::repeat_last)
    return script.entries[last_match].response;
  throw BackendError("script exhausted for template id '" + prompt.template_id + "'");
}

ScriptedBackend::ScriptedBackend(Script script) : script_(std::move(script)) {
  consumed_.assign(script_.entries.size(), false);
}

std::string ScriptedBackend::generate(const PromptBundle& prompt) {
  std::string response;
  std::string error;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    try {
      response = scripted_generate(script_, consumed_, prompt);
    } catch (const BackendError& e) {
      error = e.what();
    }
  }
  if (transcripts_) transcripts_->record(id(), prompt, response, error, !deterministic());
  if (!error.empty()) throw BackendError(error);
  return response;
}

json ScriptedBackend::state() const {
  json consumed = json::array();
  for (bool c : consumed_) consumed.push_back(c);
  return {{"consumed", consumed}};
}

void ScriptedBackend::restore_state(const json& state) {
  if (!state.is_object() || !state.contains("consumed")) return;
  const auto& consumed = state.at("consumed");
  for (size_t i = 0; i < consumed_.size() && i < consumed.size(); ++i)
    consumed_[i] = consumed[i].get<bool>();
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

json RemoteBackend::request_body(const PromptBundle& prompt) const {
  json messages = json::array();
  for (const ChatMessage& m : prompt.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", config_.model},
          {"messages", messages},
          {"temperature", config_.temperature},
          {"max_tokens", config_.max_tokens},
          {"metadata", {{"template_id", prompt.template_id}}}};
}

std::string RemoteBackend::generate(const PromptBundle& prompt) {
  const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());
  if (!config_.api_key_env.empty() && !key)
    throw BackendError("environment variable " + config_.api_key_env +
                       " is not set (it must hold the API key)");

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_s);
  client.set_read_timeout(config_.timeout_s);
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string response_text;
  std::string error;
  auto result = client.Post(config_.path, headers, request_body(prompt).dump(),
                            "application/json");
  if (!result) {
    error = "backend unreachable: " + httplib::to_string(result.error());
  } else if (result->status != 200) {
    error = "backend returned status " + std::to_string(result->status) + ": " + result->body;
  } else {
    json body = json::parse(result->body, nullptr, false);
    if (body.is_discarded() || !body.contains("choices") || body["choices"].empty()) {
      error = "backend returned malformed completion body";
    } else {
      response_text = body["choices"][0]["message"]["content"].get<std::string>();
    }
  }

  if (transcripts_) transcripts_->record(id(), prompt, response_text, error, true);
  if (!error.empty()) throw BackendError(error);
  return response_text;
}

}  // namespace teforge
