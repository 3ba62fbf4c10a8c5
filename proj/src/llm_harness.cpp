#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "collider/llm_harness.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace collider {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool valid_hash(std::string_view h) {
  if (h.size() != 64) return false;
  for (char c : h) {
    if (!std::isxdigit(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_decimal_token(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++frac_digits;
  }
  return i == s.size() && (int_digits + frac_digits) > 0;
}

double to_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::NotNumeric, "cannot parse '" + std::string(token) + "'");
  }
  return value;
}

// Minimum spacing between request starts, shared by all workers.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second) {
    if (per_second > 0.0) {
      interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / per_second));
    }
  }

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{0};
  std::chrono::steady_clock::time_point next_{};
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidInput, "base URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : fallback;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::TransportFailure, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

void QueryRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::InvalidInput, "prompt is empty");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidInput, "temperature must be >= 0");
  if (max_retries < 0) throw Error(ErrorCode::InvalidInput, "max_retries must be >= 0");
}

std::string request_hash(const QueryRequest& req) {
  return sha256_hex(req.model + "\n" + shortest(req.temperature) + "\n" + req.prompt);
}

double parse_numeric(std::string_view raw, ParseMode mode) {
  double value = 0.0;
  if (mode == ParseMode::Strict) {
    std::string_view s = trim(raw);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    if (!is_decimal_token(s)) {
      throw Error(ErrorCode::NotNumeric, "response is not a single number: '" + std::string(trim(raw)) + "'");
    }
    value = to_double(s);
  } else {
    static const std::regex kNumber(R"([+-]?(\d+(\.\d*)?|\.\d+))");
    const std::string text(raw);
    std::smatch m;
    if (!std::regex_search(text, m, kNumber)) {
      throw Error(ErrorCode::NotNumeric, "response contains no number: '" + std::string(trim(raw)) + "'");
    }
    std::string token = m.str();
    if (token.back() == '.') token.pop_back();
    value = to_double(token);
  }
  if (!(value >= 0.0 && value <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, "response " + shortest(value) + " outside [0, 100]");
  }
  return value;
}

std::string entry_to_json(const TranscriptEntry& e) {
  json j;
  j["request_hash"] = e.request_hash;
  j["raw_response"] = e.raw_response;
  j["parsed_value"] = e.parsed_value ? json(*e.parsed_value) : json(nullptr);
  j["timestamp"] = e.timestamp;
  j["error"] = e.error ? json(*e.error) : json(nullptr);
  return j.dump();
}

TranscriptEntry entry_from_json(std::string_view text, const std::string& source) {
  try {
    const json j = json::parse(text);
    TranscriptEntry e;
    e.request_hash = j.at("request_hash").get<std::string>();
    e.raw_response = j.at("raw_response").get<std::string>();
    if (!j.at("parsed_value").is_null()) e.parsed_value = j.at("parsed_value").get<double>();
    e.timestamp = j.at("timestamp").get<std::string>();
    if (!j.at("error").is_null()) e.error = j.at("error").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::StoreCorruption, source + ": " + ex.what());
  }
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<TranscriptEntry> TranscriptStore::get(const std::string& hash) const {
  if (!valid_hash(hash)) throw Error(ErrorCode::InvalidInput, "malformed request hash '" + hash + "'");
  const auto path = dir_ / (hash + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  TranscriptEntry e = entry_from_json(buf.str(), path.string());
  if (e.request_hash != hash) {
    throw Error(ErrorCode::StoreCorruption, path.string() + ": stored hash " + e.request_hash + " does not match file name");
  }
  return e;
}

bool TranscriptStore::put(const TranscriptEntry& entry) {
  if (!valid_hash(entry.request_hash)) throw Error(ErrorCode::InvalidInput, "malformed request hash");
  std::filesystem::create_directories(dir_);
  const auto target = dir_ / (entry.request_hash + ".json");
  if (std::filesystem::exists(target)) return false;
  static std::atomic<std::uint64_t> counter{0};
  const auto tmp = dir_ / ("." + entry.request_hash + "." + std::to_string(::getpid()) + "." +
                           std::to_string(counter++) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << entry_to_json(entry) << '\n';
    if (!out.flush()) throw Error(ErrorCode::StoreCorruption, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
  return true;
}

std::size_t TranscriptStore::verify() const {
  std::size_t count = 0;
  if (!std::filesystem::exists(dir_)) return 0;
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(dir_)) {
    if (item.path().extension() == ".json") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    if (!valid_hash(stem)) throw Error(ErrorCode::StoreCorruption, path.string() + ": file name is not a request hash");
    const auto entry = get(stem);
    if (entry->parsed_value && !(*entry->parsed_value >= 0.0 && *entry->parsed_value <= 100.0)) {
      throw Error(ErrorCode::StoreCorruption, path.string() + ": parsed value outside [0, 100]");
    }
    ++count;
  }
  return count;
}

std::size_t TranscriptStore::verify_requests(std::span<const QueryRequest> requests) const {
  std::size_t found = 0;
  for (const QueryRequest& req : requests) {
    const std::string hash = request_hash(req);
    if (const auto entry = get(hash)) {
      if (entry->request_hash != hash) throw Error(ErrorCode::StoreCorruption, "entry for " + hash + " carries another hash");
      ++found;
    }
  }
  return found;
}

TranscriptEntry ReplayTransport::exchange(const QueryRequest&, const std::string& hash) {
  auto entry = store_.get(hash);
  if (!entry) throw Error(ErrorCode::CacheMiss, "no stored transcript for request " + hash);
  return *entry;
}

TranscriptEntry CachedTransport::exchange(const QueryRequest& req, const std::string& hash) {
  if (auto entry = store_.get(hash)) return *entry;
  return inner_.exchange(req, hash);
}

CompletionTransport::CompletionTransport(ParseMode mode, Clock clock)
    : mode_(mode), clock_(clock ? std::move(clock) : Clock(utc_now)) {}

TranscriptEntry CompletionTransport::exchange(const QueryRequest& req, const std::string& hash) {
  TranscriptEntry e;
  e.request_hash = hash;
  e.raw_response = complete(req);
  e.timestamp = clock_();
  try {
    e.parsed_value = parse_numeric(e.raw_response, mode_);
  } catch (const Error& err) {
    e.error = err.what();
  }
  return e;
}

ScriptedTransport::ScriptedTransport(Script script, ParseMode mode, Clock clock)
    : CompletionTransport(mode, std::move(clock)), script_(std::move(script)) {}

std::size_t ScriptedTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string ScriptedTransport::complete(const QueryRequest& req) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return script_(req);
}

ProviderConfig ProviderConfig::from_env(const std::string& provider) {
  ProviderConfig c;
  c.id = provider;
  if (provider == "openai") {
    c.base_url = env_or("OPENAI_BASE_URL", "https://api.openai.com");
    c.api_key = env_or("OPENAI_API_KEY", "");
  } else if (provider == "anthropic") {
    c.base_url = env_or("ANTHROPIC_BASE_URL", "https://api.anthropic.com");
    c.api_key = env_or("ANTHROPIC_API_KEY", "");
  } else if (provider == "gemini") {
    c.base_url = env_or("GEMINI_BASE_URL", "https://generativelanguage.googleapis.com");
    c.api_key = env_or("GEMINI_API_KEY", "");
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown provider '" + provider + "' (openai, anthropic, gemini)");
  }
  return c;
}

HttpTransport::HttpTransport(ProviderConfig config, ParseMode mode, Clock clock)
    : CompletionTransport(mode, std::move(clock)), config_(std::move(config)) {}

std::string HttpTransport::complete(const QueryRequest& req) {
  const SplitUrl url = split_url(config_.base_url);
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  std::string path;
  json body;
  if (config_.id == "openai") {
    path = url.prefix + "/v1/chat/completions";
    headers.emplace("Authorization", "Bearer " + config_.api_key);
    body = {{"model", req.model},
            {"temperature", req.temperature},
            {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})}};
  } else if (config_.id == "anthropic") {
    path = url.prefix + "/v1/messages";
    headers.emplace("x-api-key", config_.api_key);
    headers.emplace("anthropic-version", "2023-06-01");
    body = {{"model", req.model},
            {"max_tokens", 64},
            {"temperature", req.temperature},
            {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})}};
  } else if (config_.id == "gemini") {
    path = url.prefix + "/v1beta/models/" + req.model + ":generateContent";
    headers.emplace("x-goog-api-key", config_.api_key);
    body = {{"contents", json::array({{{"role", "user"}, {"parts", json::array({{{"text", req.prompt}}})}}})},
            {"generationConfig", {{"temperature", req.temperature}}}};
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown provider '" + config_.id + "'");
  }

  const auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout, config_.id + ": " + what);
    }
    throw Error(ErrorCode::TransportFailure, config_.id + ": " + what);
  }
  if (res->status == 429) throw Error(ErrorCode::RateLimited, config_.id + ": HTTP 429");
  if (res->status == 408 || res->status == 504) {
    throw Error(ErrorCode::Timeout, config_.id + ": HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::TransportFailure, config_.id + ": HTTP " + std::to_string(res->status));
  }
  try {
    const json reply = json::parse(res->body);
    if (config_.id == "openai") return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    if (config_.id == "anthropic") return reply.at("content").at(0).at("text").get<std::string>();
    return reply.at("candidates").at(0).at("content").at("parts").at(0).at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TransportFailure, config_.id + ": unexpected response body: " + e.what());
  }
}

TranscriptEntry execute_query(const QueryRequest& req, Transport& transport, TranscriptStore* store,
                              const HarnessOptions& options) {
  req.validate();
  const std::string hash = request_hash(req);
  for (int attempt = 0;; ++attempt) {
    try {
      TranscriptEntry entry = transport.exchange(req, hash);
      if (store && transport.persists()) store->put(entry);
      return entry;
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::Timeout || e.code() == ErrorCode::RateLimited;
      if (!retryable || attempt >= req.max_retries) throw;
      std::this_thread::sleep_for(options.backoff_base * (1LL << std::min(attempt, 16)));
    }
  }
}

ExperimentReport run_experiment(std::span<const PromptBundle> bundles, const QueryRequest& request_template,
                                Transport& transport, TranscriptStore* store, const HarnessOptions& options) {
  if (bundles.empty()) throw Error(ErrorCode::EmptyInput, "no prompt bundles to run");

  struct Slot {
    std::optional<JudgmentRecord> record;
    std::optional<RunError> error;
  };
  std::vector<Slot> slots(bundles.size());
  RateLimiter limiter(options.requests_per_second);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex fatal_mu;
  std::optional<Error> fatal;

  auto worker = [&] {
    for (std::size_t i = next++; i < bundles.size() && !abort; i = next++) {
      const PromptBundle& b = bundles[i];
      QueryRequest req = request_template;
      req.prompt = b.full_text;
      RunError err{i, b.domain, b.counterbalance, b.task.id, {}, {}};
      try {
        err.request_hash = request_hash(req);
        limiter.acquire();
        const TranscriptEntry entry = execute_query(req, transport, store, options);
        if (entry.parsed_value) {
          JudgmentRecord r;
          r.agent_id = req.model;
          r.agent_type = AgentType::LLM;
          r.model_name = req.model;
          r.domain = b.domain;
          r.counterbalance = b.counterbalance;
          r.task_id = b.task.id;
          r.response = *entry.parsed_value;
          r.temperature = req.temperature;
          slots[i].record = std::move(r);
        } else {
          err.message = entry.error.value_or("no parsed value");
          slots[i].error = std::move(err);
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::StoreCorruption) {
          std::lock_guard lock(fatal_mu);
          if (!fatal) fatal = e;
          abort = true;
          return;
        }
        err.message = e.what();
        slots[i].error = std::move(err);
      } catch (const std::exception& e) {
        err.message = std::string("TransportFailure: ") + e.what();
        slots[i].error = std::move(err);
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.concurrency, bundles.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) throw *fatal;

  ExperimentReport report;
  for (auto& s : slots) {
    if (s.record) report.records.push_back(std::move(*s.record));
    if (s.error) report.errors.push_back(std::move(*s.error));
  }
  return report;
}

}  // namespace collider
