#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vtab/core.hpp"
#include "vtab/parse.hpp"
#include "vtab/prompts.hpp"
#include "vtab/rng.hpp"

namespace vtab {

enum class ApiStyle { OpenAIChatCompatible, GeminiGenerate, LocalMock };

inline std::string_view to_string(ApiStyle s) {
  switch (s) {
    case ApiStyle::OpenAIChatCompatible:
      return "openai";
    case ApiStyle::GeminiGenerate:
      return "gemini";
    default:
      return "mock";
  }
}

enum class MockBehavior { Oracle, Empty, Runaway, Random, OffByK };

struct ModelEndpoint {
  std::string name;
  ApiStyle api_style = ApiStyle::LocalMock;
  std::string model;
  std::string base_url;
  // Name of the environment variable holding the key; the key itself is never stored.
  std::string auth_env;
  int max_tokens = 1024;
  double temperature = 0.0;
  double timeout_s = 120.0;
  double rate_limit_rpm = 0.0;  // 0 disables spacing
  int max_in_flight = 4;
  MockBehavior mock = MockBehavior::Oracle;
  std::int64_t mock_param = 0;  // seed for Random, k for OffByK
};

inline Json to_json(const ModelEndpoint& e) {
  return Json{{"name", e.name},         {"api_style", to_string(e.api_style)},
              {"model", e.model},       {"base_url", e.base_url},
              {"auth_env", e.auth_env}, {"max_tokens", e.max_tokens},
              {"temperature", e.temperature}, {"timeout_s", e.timeout_s},
              {"rate_limit_rpm", e.rate_limit_rpm}, {"max_in_flight", e.max_in_flight}};
}

inline ModelEndpoint mock_model(MockBehavior behavior, std::int64_t param = 0) {
  ModelEndpoint e;
  e.api_style = ApiStyle::LocalMock;
  e.mock = behavior;
  e.mock_param = param;
  switch (behavior) {
    case MockBehavior::Oracle:
      e.name = "mock:oracle";
      break;
    case MockBehavior::Empty:
      e.name = "mock:empty";
      break;
    case MockBehavior::Runaway:
      e.name = "mock:runaway";
      break;
    case MockBehavior::Random:
      e.name = "mock:random:" + std::to_string(param);
      break;
    case MockBehavior::OffByK:
      e.name = "mock:offbyk:" + std::to_string(param);
      break;
  }
  e.model = e.name;
  return e;
}

// "mock:oracle", "mock:empty", "mock:runaway", "mock:random:<seed>",
// "mock:offbyk:<k>", "openai:<model>", "gemini:<model>".
inline ModelEndpoint parse_endpoint(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ConfigError("endpoint must look like <style>:<model>, got '" + std::string(spec) + "'");
  const auto style = spec.substr(0, colon);
  const auto rest = spec.substr(colon + 1);
  auto int_arg = [&](std::string_view prefix) -> std::int64_t {
    const auto arg = rest.substr(prefix.size());
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (ec != std::errc() || p != arg.data() + arg.size() || arg.empty()) {
      throw ConfigError("bad integer in endpoint '" + std::string(spec) + "'");
    }
    return v;
  };
  if (style == "mock") {
    if (rest == "oracle") return mock_model(MockBehavior::Oracle);
    if (rest == "empty") return mock_model(MockBehavior::Empty);
    if (rest == "runaway") return mock_model(MockBehavior::Runaway);
    if (rest.rfind("random:", 0) == 0) return mock_model(MockBehavior::Random, int_arg("random:"));
    if (rest.rfind("offbyk:", 0) == 0) return mock_model(MockBehavior::OffByK, int_arg("offbyk:"));
    throw ConfigError("unknown mock behavior '" + std::string(rest) + "'");
  }
  if (rest.empty()) throw ConfigError("endpoint model name is empty");
  ModelEndpoint e;
  e.name = std::string(spec);
  e.model = std::string(rest);
  if (style == "openai") {
    e.api_style = ApiStyle::OpenAIChatCompatible;
    e.base_url = "https://api.openai.com/v1";
    e.auth_env = "OPENAI_API_KEY";
  } else if (style == "gemini") {
    e.api_style = ApiStyle::GeminiGenerate;
    e.base_url = "https://generativelanguage.googleapis.com/v1beta";
    e.auth_env = "GEMINI_API_KEY";
  } else {
    throw ConfigError("unknown api style '" + std::string(style) + "'");
  }
  return e;
}

struct ResponseRecord {
  std::string sample_id;
  std::string endpoint;
  std::string prompt_hash;
  std::string image_hash;
  std::string raw_text;
  double latency_ms = 0.0;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  bool retrieved_from_cache = false;
  std::string timestamp;
  // Empty on success; "http <status>" for permanent endpoint errors.
  std::string error;

  std::string key() const { return sample_id + "|" + endpoint + "|" + prompt_hash + "|" + image_hash; }
};

inline Json to_json(const ResponseRecord& r) {
  Json j{{"sample_id", r.sample_id}, {"endpoint", r.endpoint}, {"prompt_hash", r.prompt_hash},
         {"image_hash", r.image_hash}, {"raw_text", r.raw_text}, {"latency_ms", r.latency_ms}};
  j["prompt_tokens"] = r.prompt_tokens ? Json(*r.prompt_tokens) : Json(nullptr);
  j["completion_tokens"] = r.completion_tokens ? Json(*r.completion_tokens) : Json(nullptr);
  j["timestamp"] = r.timestamp;
  j["error"] = r.error;
  return j;
}

inline ResponseRecord response_from_json(const Json& j) {
  ResponseRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.endpoint = j.at("endpoint").get<std::string>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.image_hash = j.at("image_hash").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  if (j.contains("prompt_tokens") && !j["prompt_tokens"].is_null()) r.prompt_tokens = j["prompt_tokens"].get<std::int64_t>();
  if (j.contains("completion_tokens") && !j["completion_tokens"].is_null()) {
    r.completion_tokens = j["completion_tokens"].get<std::int64_t>();
  }
  r.timestamp = j.value("timestamp", std::string());
  r.error = j.value("error", std::string());
  return r;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Append-only JSONL store. A torn final line from an interrupted run is cut
// off on open; all appends go through one mutex.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (std::filesystem::exists(path_)) load();
  }

  std::optional<ResponseRecord> lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  void append(const ResponseRecord& r) {
    std::lock_guard lock(mutex_);
    if (records_.count(r.key())) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to " + path_.string());
    out << to_json(r).dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
    out.flush();
    records_.emplace(r.key(), r);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void load() {
    std::ifstream in(path_, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    if (keep != text.size()) {
      in.close();
      std::filesystem::resize_file(path_, keep);
      text.resize(keep);
    }
    std::size_t start = 0;
    std::size_t line = 0;
    while (start < text.size()) {
      const auto end = text.find('\n', start);
      ++line;
      const auto body = std::string_view(text).substr(start, end - start);
      start = end + 1;
      if (body.empty()) continue;
      try {
        auto r = response_from_json(Json::parse(body));
        records_.emplace(r.key(), std::move(r));
      } catch (const std::exception& e) {
        throw FormatError(path_.string() + ": " + e.what(), line);
      }
    }
  }

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, ResponseRecord> records_;
};

struct HttpRequest {
  std::string base_url;
  std::string path;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_s = 120.0;
};

// status 0 means the request never produced an HTTP response.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttplibTransport : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    // Split "scheme://host[:port]/prefix" into origin and path prefix.
    const auto scheme_end = request.base_url.find("://");
    const auto path_start = request.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const auto origin = request.base_url.substr(0, path_start);
    const auto prefix = path_start == std::string::npos ? std::string() : request.base_url.substr(path_start);
    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(request.timeout_s);
    const auto usecs = static_cast<time_t>((request.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto res = client.Post(prefix + request.path, headers, request.body, "application/json");
    HttpResponse out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

struct RetryPolicy {
  int max_retries = 5;
  double base_delay_s = 0.5;
  double max_delay_s = 8.0;

  double delay(int attempt) const { return std::min(max_delay_s, base_delay_s * std::pow(2.0, attempt)); }
};

inline bool is_transient_status(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

using Sleeper = std::function<void(double seconds)>;

inline void real_sleep(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// Hands out request start slots at least 60/rpm seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double rpm) : interval_(rpm > 0 ? 60.0 / rpm : 0.0) {}

  void acquire() {
    if (interval_ <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(interval_));
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

// Counting gate bounding concurrent requests; records the peak for checks.
class InFlightGate {
 public:
  explicit InFlightGate(int limit) : limit_(std::max(1, limit)) {}

  void enter() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
    peak_ = std::max(peak_, active_);
  }

  void leave() {
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

  int peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
  }

 private:
  int limit_;
  int active_ = 0;
  int peak_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace detail {

inline std::string runaway_text(Granularity g, int max_tokens) {
  std::string out = "[";
  for (int i = 0; i < max_tokens; ++i) {
    if (i) out += ", ";
    out += g == Granularity::Range ? "[" + std::to_string(2 * i) + ", " + std::to_string(2 * i + 1) + "]" : std::to_string(i);
  }
  return out;  // cut at the token limit, never closed
}

inline std::string random_text(const Sample& s, Granularity g, std::uint64_t seed) {
  Rng rng(derive_seed(seed, std::string_view(s.id)));
  const auto length = s.series.length;
  switch (g) {
    case Granularity::Point: {
      const auto n = rng.uniform_int(1, 5);
      std::vector<std::int64_t> pts;
      for (std::int64_t i = 0; i < n; ++i) pts.push_back(rng.uniform_int(0, length - 1));
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      return format_answer(pts);
    }
    case Granularity::Range: {
      const auto n = rng.uniform_int(1, 3);
      std::vector<IndexRange> rs;
      for (std::int64_t i = 0; i < n; ++i) {
        const auto len = rng.uniform_int(5, 40);
        const auto start = rng.uniform_int(0, std::max<std::int64_t>(0, length - len));
        rs.push_back({start, std::min(length - 1, start + len - 1)});
      }
      return format_answer(merge_ranges(rs));
    }
    default: {
      const auto m = static_cast<std::int64_t>(s.series.variates());
      const auto n = rng.uniform_int(1, std::min<std::int64_t>(3, m));
      auto ids = rng.sample_without_replacement(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
      return format_answer(ids);
    }
  }
}

inline std::string off_by_k_text(const Sample& s, Granularity g, std::int64_t k) {
  const auto length = s.series.length;
  const auto& label = s.label;
  switch (g) {
    case Granularity::Point: {
      std::vector<std::int64_t> pts;
      for (auto p : label.points) pts.push_back(std::clamp<std::int64_t>(p + k, 0, length - 1));
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      return format_answer(pts);
    }
    case Granularity::Range: {
      std::vector<IndexRange> rs;
      for (auto r : label.ranges) {
        rs.push_back({std::clamp<std::int64_t>(r.first + k, 0, length - 1), std::clamp<std::int64_t>(r.last + k, 0, length - 1)});
      }
      return format_answer(merge_ranges(rs));
    }
    default: {
      const auto m = static_cast<std::int64_t>(s.series.variates());
      std::vector<std::int64_t> ids;
      for (auto v : label.variates) ids.push_back(((v + k) % m + m) % m);
      std::sort(ids.begin(), ids.end());
      return format_answer(ids);
    }
  }
}

}  // namespace detail

// Reply a local mock gives for this sample and prompt.
inline std::string mock_reply(const ModelEndpoint& e, const Sample& sample, Granularity g) {
  switch (e.mock) {
    case MockBehavior::Oracle:
      return format_answer(sample.label);
    case MockBehavior::Empty:
      return "[]";
    case MockBehavior::Runaway:
      return detail::runaway_text(g, e.max_tokens);
    case MockBehavior::Random:
      return detail::random_text(sample, g, static_cast<std::uint64_t>(e.mock_param));
    case MockBehavior::OffByK:
      return detail::off_by_k_text(sample, g, e.mock_param);
  }
  return "[]";
}

inline std::string build_request_body(const ModelEndpoint& e, const std::vector<std::uint8_t>& image,
                                      const PromptTemplate& prompt) {
  const auto data = base64_encode(image);
  if (e.api_style == ApiStyle::OpenAIChatCompatible) {
    Json content = Json::array();
    content.push_back(Json{{"type", "text"}, {"text", prompt.text}});
    content.push_back(Json{{"type", "image_url"}, {"image_url", Json{{"url", "data:image/png;base64," + data}}}});
    return Json{{"model", e.model},
                {"max_tokens", e.max_tokens},
                {"temperature", e.temperature},
                {"messages", Json::array({Json{{"role", "user"}, {"content", content}}})}}
        .dump();
  }
  Json parts = Json::array();
  parts.push_back(Json{{"text", prompt.text}});
  parts.push_back(Json{{"inline_data", Json{{"mime_type", "image/png"}, {"data", data}}}});
  return Json{{"contents", Json::array({Json{{"role", "user"}, {"parts", parts}}})},
              {"generationConfig", Json{{"temperature", e.temperature}, {"maxOutputTokens", e.max_tokens}}}}
      .dump();
}

struct ParsedReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

inline ParsedReply parse_reply_body(ApiStyle style, const std::string& body) {
  const auto j = Json::parse(body);
  ParsedReply out;
  if (style == ApiStyle::OpenAIChatCompatible) {
    const auto& msg = j.at("choices").at(0).at("message");
    if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
    if (j.contains("usage")) {
      const auto& u = j["usage"];
      if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
      if (u.contains("completion_tokens")) out.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
    return out;
  }
  const auto& cands = j.at("candidates");
  if (!cands.empty() && cands[0].contains("content")) {
    for (const auto& part : cands[0]["content"].value("parts", Json::array())) {
      if (part.contains("text")) out.text += part["text"].get<std::string>();
    }
  }
  if (j.contains("usageMetadata")) {
    const auto& u = j["usageMetadata"];
    if (u.contains("promptTokenCount")) out.prompt_tokens = u["promptTokenCount"].get<std::int64_t>();
    if (u.contains("candidatesTokenCount")) out.completion_tokens = u["candidatesTokenCount"].get<std::int64_t>();
  }
  return out;
}

// Thread-safe client for one endpoint. Cache hits never reach the transport.
class LlmClient {
 public:
  LlmClient(ModelEndpoint endpoint, std::shared_ptr<ResponseCache> cache,
            std::shared_ptr<Transport> transport = std::make_shared<HttplibTransport>(), RetryPolicy retry = {},
            Sleeper sleeper = real_sleep)
      : endpoint_(std::move(endpoint)),
        cache_(std::move(cache)),
        transport_(std::move(transport)),
        retry_(retry),
        sleeper_(std::move(sleeper)),
        limiter_(endpoint_.rate_limit_rpm),
        gate_(endpoint_.max_in_flight) {}

  const ModelEndpoint& endpoint() const { return endpoint_; }
  std::size_t network_calls() const { return network_calls_.load(); }
  int peak_in_flight() const { return gate_.peak(); }

  ResponseRecord query(const Sample& sample, const std::vector<std::uint8_t>& image, const PromptTemplate& prompt) {
    ResponseRecord rec;
    rec.sample_id = sample.id;
    rec.endpoint = endpoint_.name;
    rec.prompt_hash = prompt.hash();
    rec.image_hash = sha256_hex(std::span<const std::uint8_t>(image));
    if (cache_) {
      if (auto hit = cache_->lookup(rec.key())) {
        hit->retrieved_from_cache = true;
        return *hit;
      }
    }
    const auto started = std::chrono::steady_clock::now();
    if (endpoint_.api_style == ApiStyle::LocalMock) {
      rec.raw_text = mock_reply(endpoint_, sample, prompt.granularity);
    } else {
      call_remote(rec, image, prompt);
    }
    rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    rec.timestamp = utc_timestamp();
    if (cache_) cache_->append(rec);
    return rec;
  }

 private:
  void call_remote(ResponseRecord& rec, const std::vector<std::uint8_t>& image, const PromptTemplate& prompt) {
    const char* key = endpoint_.auth_env.empty() ? nullptr : std::getenv(endpoint_.auth_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + endpoint_.auth_env + " is not set");
    HttpRequest req;
    req.base_url = endpoint_.base_url;
    req.timeout_s = endpoint_.timeout_s;
    req.body = build_request_body(endpoint_, image, prompt);
    if (endpoint_.api_style == ApiStyle::OpenAIChatCompatible) {
      req.path = "/chat/completions";
      req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    } else {
      req.path = "/models/" + endpoint_.model + ":generateContent";
      req.headers.emplace_back("x-goog-api-key", key);
    }
    std::string last_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
      if (attempt > 0) sleeper_(retry_.delay(attempt - 1));
      limiter_.acquire();
      gate_.enter();
      ++network_calls_;
      HttpResponse res;
      try {
        res = transport_->post(req);
      } catch (const std::exception& e) {
        res.status = 0;
        res.error = e.what();
      }
      gate_.leave();
      if (res.status >= 200 && res.status < 300) {
        try {
          auto reply = parse_reply_body(endpoint_.api_style, res.body);
          rec.raw_text = std::move(reply.text);
          rec.prompt_tokens = reply.prompt_tokens;
          rec.completion_tokens = reply.completion_tokens;
        } catch (const std::exception&) {
          rec.error = "unreadable response body";
        }
        return;
      }
      if (!is_transient_status(res.status)) {
        rec.error = "http " + std::to_string(res.status);
        return;
      }
      last_error = res.status == 0 ? "network: " + res.error : "http " + std::to_string(res.status);
    }
    throw TransientFailure(endpoint_.name + ": retries exhausted (" + last_error + ")");
  }

  ModelEndpoint endpoint_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<Transport> transport_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  RateLimiter limiter_;
  InFlightGate gate_;
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace vtab
