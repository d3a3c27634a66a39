#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erl/prompts.hpp"
#include "erl/teacher.hpp"

namespace erl {

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("budget exhausted") {}
};

class TeacherUnavailable : public std::runtime_error {
 public:
  explicit TeacherUnavailable(std::string last_response)
      : std::runtime_error("teacher unavailable"), last_response_(std::move(last_response)) {}
  const std::string& last_response() const { return last_response_; }

 private:
  std::string last_response_;
};

struct VlmConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string api_key;
  std::string model = "gemini-1.5-pro";
  double temperature = 0.0;
  int max_retries = 3;  // attempts per segment before giving up
  std::size_t max_in_flight = 4;
  std::string cache_path;  // empty disables persistence
  std::size_t budget = 0;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  std::chrono::seconds timeout{120};
  int n_classes = 3;
  std::vector<std::string> class_names = default_class_names(3);
};

/// Fills endpoint and api_key from VLM_ENDPOINT / VLM_API_KEY. Throws
/// std::invalid_argument when VLM_ENDPOINT is unset.
VlmConfig vlm_config_from_env(VlmConfig base);

struct RatingResponse {
  std::string raw_text;
  std::optional<std::vector<RatingLabel>> parsed;
  std::size_t tokens_used = 0;
  bool cached = false;
};

/// Sends one JSON request and returns the model's text reply.
class VlmTransport {
 public:
  virtual ~VlmTransport() = default;
  virtual std::string complete(const nlohmann::json& request) = 0;
};

/// POSTs the request as JSON; throws std::runtime_error on transport or HTTP
/// errors and on bodies without a recognizable text field.
class HttpVlmTransport final : public VlmTransport {
 public:
  HttpVlmTransport(std::string endpoint, std::string api_key,
                   std::chrono::seconds timeout = std::chrono::seconds{120});
  std::string complete(const nlohmann::json& request) override;

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// Pulls the reply text out of {"text": ...} and a few common provider shapes.
std::optional<std::string> extract_response_text(const nlohmann::json& body);

std::string base64_encode(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes);
std::string segment_hash(const Segment& segment);

/// Two-stage VLM rating with retries, a persistent response cache and a hard
/// query budget. Thread safe.
class VlmTeacher {
 public:
  explicit VlmTeacher(VlmConfig config, std::shared_ptr<VlmTransport> transport = nullptr);

  /// One label per transition (one for single-step segments). Cache hits are
  /// free; otherwise one budget unit is charged when the request is issued.
  std::vector<RatingLabel> rate(const Segment& segment);
  RatingResponse rate_with_details(const Segment& segment);

  struct Outcome {
    std::optional<std::vector<RatingLabel>> labels;
    std::string error;
    bool cached = false;
  };
  /// Rates segments with up to max_in_flight concurrent requests.
  std::vector<Outcome> rate_all(const std::vector<Segment>& segments);

  std::size_t budget_used() const { return budget_used_.load(); }
  std::size_t budget_remaining() const;
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t requests_sent() const { return requests_sent_.load(); }
  const VlmConfig& config() const { return config_; }

  nlohmann::json make_request(const std::string& prompt,
                              const std::vector<std::string>& observations,
                              bool images) const;

 private:
  struct CacheEntry {
    std::string raw;
    std::vector<RatingLabel> labels;
  };
  bool try_charge();
  void load_cache();
  void store(const std::string& key, const CacheEntry& entry);

  VlmConfig config_;
  std::shared_ptr<VlmTransport> transport_;
  std::atomic<std::size_t> budget_used_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> requests_sent_{0};
  mutable std::mutex cache_mutex_;
  std::map<std::string, CacheEntry> cache_;
};

/// Adapts VlmTeacher to the training loop. Multi-step segments are split so
/// each transition becomes its own length-1 rating sample.
class VlmRatingTeacher final : public RatingTeacher {
 public:
  explicit VlmRatingTeacher(std::shared_ptr<VlmTeacher> teacher);
  int num_classes() const override { return teacher_->config().n_classes; }
  std::vector<std::string> class_names() const override {
    return teacher_->config().class_names;
  }
  RatingQuery rate(const std::vector<Segment>& segments) override;

 private:
  std::shared_ptr<VlmTeacher> teacher_;
};

/// Length-1 sub-segment for transition k of a rated segment.
Segment transition_segment(const Segment& segment, std::size_t k);

}  // namespace erl
