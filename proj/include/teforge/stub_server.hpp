#pragma once

#include <memory>
#include <thread>

#include "teforge/backend.hpp"

namespace teforge {

/// Local chat-completions stub speaking the RemoteBackend wire format and
/// answering from a Script; lets the remote client path run without any
/// external network. Requests are logged for cross-checking against
/// client-side transcripts.
class StubServer {
 public:
  /// Binds immediately on 127.0.0.1; port 0 picks a free port. Requests must
  /// carry "Authorization: Bearer <expected_api_key>" unless the key is
  /// empty. Throws BackendError when the port cannot be bound.
  StubServer(Script script, int port, std::string expected_api_key);
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<json> request_log() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace teforge
