#pragma once

#include <memory>
#include <mutex>

#include "teforge/prompts.hpp"

namespace teforge {

/// Serializes one JSON file per LLM call into a directory. Safe to share
/// between concurrently running pipelines.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::string dir);

  /// `timestamps` false keeps transcripts reproducible (mock runs).
  void record(const std::string& backend_id, const PromptBundle& prompt,
              const std::string& response, const std::string& error, bool timestamps);
  int calls() const;

 private:
  std::string dir_;
  mutable std::mutex mutex_;
  int sequence_ = 0;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string id() const = 0;
  /// Returns the model text; throws BackendError when the backend is
  /// unreachable or replies with a protocol error.
  virtual std::string generate(const PromptBundle& prompt) = 0;
  /// Deterministic backends produce timestamp-free transcripts.
  virtual bool deterministic() const { return false; }
  /// Opaque resume state (scripted consumption counters); null when the
  /// backend keeps no state.
  virtual json state() const { return nullptr; }
  virtual void restore_state(const json&) {}

  void attach_transcripts(TranscriptWriter* writer) { transcripts_ = writer; }

 protected:
  TranscriptWriter* transcripts_ = nullptr;
};

/// A scripted response list: each entry matches prompts whose template id
/// equals `match` or whose rendered text contains it. Entries are consumed
/// in order per matcher; exhaustion either repeats the last matching
/// response or raises.
struct Script {
  struct Entry {
    std::string match;
    std::string response;
  };
  enum class Exhaustion { repeat_last, error };

  std::vector<Entry> entries;
  Exhaustion policy = Exhaustion::repeat_last;

  static Script from_json(const json& j);
  static Script from_file(const std::string& path);
  json to_json() const;
};

/// Core scripted lookup; `consumed` holds one flag per entry and is advanced
/// in place. Throws BackendError on exhaustion under the error policy.
std::string scripted_generate(const Script& script, std::vector<bool>& consumed,
                              const PromptBundle& prompt);

class ScriptedBackend : public LlmBackend {
 public:
  explicit ScriptedBackend(Script script);

  std::string id() const override { return "mock"; }
  std::string generate(const PromptBundle& prompt) override;
  bool deterministic() const override { return true; }
  json state() const override;
  void restore_state(const json& state) override;

 private:
  Script script_;
  std::vector<bool> consumed_;
  std::mutex mutex_;
};

struct RemoteConfig {
  std::string endpoint;     // e.g. "http://127.0.0.1:8080"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the env var holding the bearer token
  double temperature = 0.0;
  int max_tokens = 2048;
  int timeout_s = 60;
};

/// Chat-completions-style JSON client with bearer-token auth. The prompt's
/// template id travels in a "metadata" object so local stubs can match on it.
class RemoteBackend : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  std::string id() const override { return "remote:" + config_.model; }
  std::string generate(const PromptBundle& prompt) override;

  /// The request body sent for a prompt (exposed for wire-format tests).
  json request_body(const PromptBundle& prompt) const;

 private:
  RemoteConfig config_;
};

}  // namespace teforge
