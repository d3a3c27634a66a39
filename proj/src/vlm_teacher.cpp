#include "erl/vlm_teacher.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace erl {

using nlohmann::json;

VlmConfig vlm_config_from_env(VlmConfig base) {
  const char* endpoint = std::getenv("VLM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0')
    throw std::invalid_argument("VLM teacher requires the VLM_ENDPOINT environment variable");
  base.endpoint = endpoint;
  if (const char* key = std::getenv("VLM_API_KEY")) base.api_key = key;
  return base;
}

std::optional<std::string> extract_response_text(const json& body) {
  if (body.contains("text") && body["text"].is_string()) return body["text"].get<std::string>();
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const auto& c = body["choices"][0];
    if (c.contains("message") && c["message"].contains("content") &&
        c["message"]["content"].is_string())
      return c["message"]["content"].get<std::string>();
  }
  if (body.contains("candidates") && body["candidates"].is_array() &&
      !body["candidates"].empty()) {
    const auto& c = body["candidates"][0];
    if (c.contains("content") && c["content"].contains("parts")) {
      std::string out;
      for (const auto& part : c["content"]["parts"])
        if (part.contains("text") && part["text"].is_string()) out += part["text"].get<std::string>();
      return out;
    }
  }
  return std::nullopt;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const auto b1 = static_cast<unsigned char>(bytes[i + 1]);
    const auto b2 = static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[b0 >> 2];
    out += kAlphabet[((b0 & 0x03) << 4) | (b1 >> 4)];
    out += kAlphabet[((b1 & 0x0f) << 2) | (b2 >> 6)];
    out += kAlphabet[b2 & 0x3f];
  }
  if (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const bool two = i + 1 < bytes.size();
    const auto b1 = two ? static_cast<unsigned char>(bytes[i + 1]) : 0;
    out += kAlphabet[b0 >> 2];
    out += kAlphabet[((b0 & 0x03) << 4) | (b1 >> 4)];
    out += two ? kAlphabet[(b1 & 0x0f) << 2] : '=';
    out += '=';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  return static_cast<std::size_t>(std::distance(std::istream_iterator<std::string>(in),
                                                std::istream_iterator<std::string>()));
}

}  // namespace

std::string segment_hash(const Segment& segment) {
  std::string blob = segment.task_description;
  blob += '\x1e';
  for (const Step& s : segment.steps) blob += std::to_string(s.state) + ',' + std::to_string(s.action) + ';';
  blob += '\x1e';
  for (const std::string& a : segment.action_names) blob += a + '\x1f';
  blob += '\x1e';
  for (const std::string& o : segment.observations) blob += o + '\x1f';
  blob += segment.trailing_observation ? 'T' : 'F';
  blob += segment.image_observations ? 'I' : 'X';
  return hex64(fnv1a64(blob));
}

HttpVlmTransport::HttpVlmTransport(std::string endpoint, std::string api_key,
                                   std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos)
    throw std::invalid_argument("VLM endpoint must look like http://host[:port]/path");
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::string HttpVlmTransport::complete(const json& request) {
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, request.dump(), "application/json");
  if (!res) throw std::runtime_error("VLM transport error: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("VLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                             res->body);
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw std::runtime_error("VLM response is not JSON: " + res->body);
  auto text = extract_response_text(body);
  if (!text) throw std::runtime_error("VLM response has no text field: " + res->body);
  return *text;
}

VlmTeacher::VlmTeacher(VlmConfig config, std::shared_ptr<VlmTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.n_classes < 2) throw std::invalid_argument("VLM teacher needs n_classes >= 2");
  if (static_cast<int>(config_.class_names.size()) != config_.n_classes)
    throw std::invalid_argument("VLM teacher needs one name per class");
  if (!transport_) {
    if (config_.endpoint.empty()) throw std::invalid_argument("VLM endpoint not configured");
    transport_ = std::make_shared<HttpVlmTransport>(config_.endpoint, config_.api_key,
                                                    config_.timeout);
  }
  load_cache();
}

std::size_t VlmTeacher::budget_remaining() const {
  const std::size_t used = budget_used_.load();
  return used >= config_.budget ? 0 : config_.budget - used;
}

bool VlmTeacher::try_charge() {
  std::size_t used = budget_used_.load();
  do {
    if (used >= config_.budget) return false;
  } while (!budget_used_.compare_exchange_weak(used, used + 1));
  return true;
}

json VlmTeacher::make_request(const std::string& prompt,
                              const std::vector<std::string>& observations,
                              bool images) const {
  json content = json::array();
  for (const std::string& obs : observations) {
    if (images)
      content.push_back({{"type", "image"}, {"mime_type", "image/png"}, {"data", base64_encode(obs)}});
    else
      content.push_back({{"type", "text"}, {"text", obs}});
  }
  content.push_back({{"type", "text"}, {"text", prompt}});
  return json{{"model", config_.model},
              {"temperature", config_.temperature},
              {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
}

void VlmTeacher::load_cache() {
  if (config_.cache_path.empty()) return;
  std::ifstream in(config_.cache_path);
  std::string line;
  while (std::getline(in, line)) {
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("key") || !rec.contains("labels")) continue;
    CacheEntry e;
    e.raw = rec.value("raw", std::string{});
    e.labels = rec["labels"].get<std::vector<RatingLabel>>();
    cache_[rec["key"].get<std::string>()] = std::move(e);
  }
}

void VlmTeacher::store(const std::string& key, const CacheEntry& entry) {
  std::lock_guard lock(cache_mutex_);
  cache_[key] = entry;
  if (config_.cache_path.empty()) return;
  std::ofstream out(config_.cache_path, std::ios::app);
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  out << json{{"key", key}, {"raw", entry.raw}, {"labels", entry.labels}, {"timestamp", now}}.dump()
      << '\n';
}

RatingResponse VlmTeacher::rate_with_details(const Segment& segment) {
  const RatingPrompt prompt =
      build_rating_prompt(segment, config_.n_classes, config_.class_names);
  std::ostringstream settings;
  settings << config_.model << '\x1f' << config_.temperature;
  const std::string key =
      segment_hash(segment) + ":" +
      hex64(fnv1a64(prompt.analysis_prompt + '\x1f' + prompt.rating_prompt_template + '\x1f' +
                    settings.str()));
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++cache_hits_;
      return RatingResponse{it->second.raw, it->second.labels, 0, true};
    }
  }
  if (!try_charge()) throw BudgetExhausted();

  std::vector<std::string> observations;
  if (prompt.single_step) {
    if (!segment.observations.empty()) observations.push_back(segment.observations.back());
  } else {
    observations = segment.observations;
  }

  std::string last_raw;
  std::size_t tokens = 0;
  const int attempts = std::max(1, config_.max_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
    try {
      ++requests_sent_;
      const std::string analysis = transport_->complete(
          make_request(prompt.analysis_prompt, observations, segment.image_observations));
      const std::string rating_prompt = fill_rating_prompt(prompt, analysis);
      ++requests_sent_;
      const std::string raw = transport_->complete(make_request(rating_prompt, {}, false));
      last_raw = raw;
      tokens += word_count(prompt.analysis_prompt) + word_count(analysis) +
                word_count(rating_prompt) + word_count(raw);
      auto parsed =
          parse_rating_response(raw, config_.n_classes, config_.class_names, prompt.expected_count);
      if (parsed) {
        store(key, CacheEntry{raw, *parsed});
        return RatingResponse{raw, std::move(parsed), tokens, false};
      }
    } catch (const std::exception& e) {
      if (last_raw.empty()) last_raw = e.what();
    }
  }
  throw TeacherUnavailable(last_raw);
}

std::vector<RatingLabel> VlmTeacher::rate(const Segment& segment) {
  return *rate_with_details(segment).parsed;
}

std::vector<VlmTeacher::Outcome> VlmTeacher::rate_all(const std::vector<Segment>& segments) {
  std::vector<Outcome> out(segments.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < segments.size(); i = next++) {
      try {
        RatingResponse r = rate_with_details(segments[i]);
        out[i].labels = std::move(r.parsed);
        out[i].cached = r.cached;
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config_.max_in_flight, segments.size()));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  return out;  // jthreads join on destruction before out is returned
}

Segment transition_segment(const Segment& segment, std::size_t k) {
  if (k >= segment.steps.size()) throw std::out_of_range("transition index out of range");
  Segment sub;
  sub.steps = {segment.steps[k]};
  if (k < segment.action_names.size()) sub.action_names = {segment.action_names[k]};
  if (k + 1 < segment.observations.size()) {
    sub.observations = {segment.observations[k], segment.observations[k + 1]};
    sub.trailing_observation = true;
  } else if (k < segment.observations.size()) {
    sub.observations = {segment.observations[k]};
  }
  sub.image_observations = segment.image_observations;
  if (k < segment.step_rewards.size()) {
    sub.step_rewards = {segment.step_rewards[k]};
    sub.ground_truth_return = segment.step_rewards[k];
  } else if (segment.steps.size() == 1) {
    sub.ground_truth_return = segment.ground_truth_return;
  }
  sub.task_description = segment.task_description;
  sub.episode_id = segment.episode_id;
  sub.start_index = segment.start_index + static_cast<int>(k);
  return sub;
}

VlmRatingTeacher::VlmRatingTeacher(std::shared_ptr<VlmTeacher> teacher)
    : teacher_(std::move(teacher)) {
  if (!teacher_) throw std::invalid_argument("VlmRatingTeacher: null teacher");
}

RatingQuery VlmRatingTeacher::rate(const std::vector<Segment>& segments) {
  const std::size_t before = teacher_->budget_used();
  const auto outcomes = teacher_->rate_all(segments);
  RatingQuery q;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!outcomes[i].labels) {
      ++q.dropped;
      continue;
    }
    const auto& labels = *outcomes[i].labels;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      RatingSample s;
      s.segment = labels.size() == 1 && segments[i].steps.size() == 1
                      ? segments[i]
                      : transition_segment(segments[i], k);
      s.label = labels[k];
      q.samples.push_back(std::move(s));
    }
  }
  q.charged = teacher_->budget_used() - before;
  return q;
}

}  // namespace erl
