#pragma once

// A small scripted HTTP endpoint speaking the VLM request/response format.

#include <httplib.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace erl::testing {

class MockVlmServer {
 public:
  struct Reply {
    int status = 200;
    std::string body;  // sent verbatim
  };
  // Receives the parsed request and a zero-based call counter.
  using Script = std::function<Reply(const nlohmann::json& request, int call)>;

  explicit MockVlmServer(Script script) : script_(std::move(script)) {
    server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = calls_++;
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      {
        std::lock_guard lock(mutex_);
        requests_.push_back(body);
        auth_headers_.push_back(req.get_header_value("Authorization"));
      }
      const Reply r = script_(body, call);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockVlmServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  MockVlmServer(const MockVlmServer&) = delete;
  MockVlmServer& operator=(const MockVlmServer&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/generate"; }
  int calls() const { return calls_.load(); }
  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mutex_);
    return auth_headers_;
  }

  static Reply text(const std::string& s) { return {200, nlohmann::json{{"text", s}}.dump()}; }

  /// Text of the final content item of the first message.
  static std::string prompt_of(const nlohmann::json& request) {
    const auto& content = request.at("messages").at(0).at("content");
    return content.back().at("text").get<std::string>();
  }

  static bool is_rating_stage(const nlohmann::json& request) {
    return prompt_of(request).find("From the above analyses") != std::string::npos;
  }

  /// Answers the analysis stage with a fixed description and the rating stage
  /// with the given reply.
  static Script two_stage(std::string rating_reply) {
    return [rating_reply](const nlohmann::json& req, int) {
      return is_rating_stage(req) ? text(rating_reply)
                                  : text("The agent moved one square closer to the goal.");
    };
  }

 private:
  Script script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_headers_;
};

}  // namespace erl::testing
