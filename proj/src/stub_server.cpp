#include "teforge/stub_server.hpp"

#include <mutex>

#ifdef TEFORGE_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace teforge {

struct StubServer::Impl {
  Script script;
  std::vector<bool> consumed;
  std::string expected_key;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  std::vector<json> log;
};

StubServer::StubServer(Script script, int port, std::string expected_api_key)
    : impl_(std::make_unique<Impl>()) {
  impl_->script = std::move(script);
  impl_->consumed.assign(impl_->script.entries.size(), false);
  impl_->expected_key = std::move(expected_api_key);

  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    std::lock_guard<std::mutex> lock(impl_->mutex);

    if (!impl_->expected_key.empty()) {
      const std::string auth = req.get_header_value("Authorization");
      if (auth != "Bearer " + impl_->expected_key) {
        res.status = 401;
        res.set_content(json({{"error", {{"message", "invalid api key"}}}}).dump(),
                        "application/json");
        return;
      }
    }

    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages")) {
      res.status = 400;
      res.set_content(json({{"error", {{"message", "malformed request body"}}}}).dump(),
                      "application/json");
      return;
    }
    impl_->log.push_back(body);

    PromptBundle prompt;
    if (body.contains("metadata") && body["metadata"].contains("template_id"))
      prompt.template_id = body["metadata"]["template_id"].get<std::string>();
    for (const auto& m : body["messages"])
      prompt.messages.push_back(
          {m.value("role", std::string{"user"}), m.value("content", std::string{})});

    try {
      std::string text = scripted_generate(impl_->script, impl_->consumed, prompt);
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
      res.set_content(reply.dump(), "application/json");
    } catch (const BackendError& e) {
      res.status = 500;
      res.set_content(json({{"error", {{"message", e.what()}}}}).dump(), "application/json");
    }
  });

  port_ = port == 0 ? impl_->server.bind_to_any_port("127.0.0.1")
                    : (impl_->server.bind_to_port("127.0.0.1", port) ? port : -1);
  if (port_ <= 0) throw BackendError("stub server could not bind port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

StubServer::~StubServer() {
  if (impl_) {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
  }
}

std::vector<json> StubServer::request_log() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->log;
}

}  // namespace teforge
