#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collider/error.hpp"
#include "collider/prompt_gen.hpp"
#include "collider/stats.hpp"

namespace collider {

struct QueryRequest {
  std::string provider;  // "openai", "anthropic", "gemini", or a mock label
  std::string model;
  double temperature = 0.0;
  std::string prompt;
  int max_retries = 3;
  std::chrono::milliseconds timeout{30000};

  void validate() const;
};

struct TranscriptEntry {
  std::string request_hash;
  std::string raw_response;
  std::optional<double> parsed_value;
  std::string timestamp;
  std::optional<std::string> error;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of "<model>\n<temperature>\n<prompt>", temperature in
/// shortest round-trip decimal form.
std::string request_hash(const QueryRequest& req);

enum class ParseMode { Strict, Lenient };

/// Strict: the trimmed text, minus one optional trailing '.', must be a single
/// decimal number. Lenient: the first decimal number anywhere in the text.
/// Throws Error(NotNumeric) or Error(OutOfRange) outside [0, 100].
double parse_numeric(std::string_view raw, ParseMode mode = ParseMode::Strict);

std::string entry_to_json(const TranscriptEntry& entry);
TranscriptEntry entry_from_json(std::string_view text, const std::string& source);

/// Append-only directory of `<hash>.json` files. Writes go through a temp
/// file and an atomic rename; an existing entry is never overwritten.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::optional<TranscriptEntry> get(const std::string& hash) const;
  /// Returns false when an entry for the hash already exists.
  bool put(const TranscriptEntry& entry);
  /// Checks every entry's file name against its request hash and its parsed
  /// value against the 0-100 range. Returns the entry count; throws
  /// Error(StoreCorruption) on the first bad entry.
  std::size_t verify() const;
  /// Ensures each request's stored entry (if any) carries its recomputed hash.
  std::size_t verify_requests(std::span<const QueryRequest> requests) const;

 private:
  std::filesystem::path dir_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string_view name() const = 0;
  /// Produces the transcript entry for a request. Throws Error with code
  /// Timeout, RateLimited, CacheMiss or TransportFailure.
  virtual TranscriptEntry exchange(const QueryRequest& req, const std::string& hash) = 0;
  /// Whether fresh entries from this transport belong in the store.
  virtual bool persists() const { return true; }
};

/// Serves stored entries; never touches the network.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const TranscriptStore& store) : store_(store) {}
  std::string_view name() const override { return "replay"; }
  TranscriptEntry exchange(const QueryRequest& req, const std::string& hash) override;
  bool persists() const override { return false; }

 private:
  const TranscriptStore& store_;
};

/// Serves stored entries when present and defers to `inner` otherwise, so an
/// interrupted run can resume without repeating completed requests.
class CachedTransport : public Transport {
 public:
  CachedTransport(Transport& inner, const TranscriptStore& store) : inner_(inner), store_(store) {}
  std::string_view name() const override { return inner_.name(); }
  TranscriptEntry exchange(const QueryRequest& req, const std::string& hash) override;
  bool persists() const override { return inner_.persists(); }

 private:
  Transport& inner_;
  const TranscriptStore& store_;
};

/// Base for transports that obtain raw completion text and parse it here.
class CompletionTransport : public Transport {
 public:
  using Clock = std::function<std::string()>;

  explicit CompletionTransport(ParseMode mode = ParseMode::Strict, Clock clock = {});
  TranscriptEntry exchange(const QueryRequest& req, const std::string& hash) final;

 protected:
  virtual std::string complete(const QueryRequest& req) = 0;

 private:
  ParseMode mode_;
  Clock clock_;
};

/// Answers from a caller-supplied function; used for tests and synthetic runs.
class ScriptedTransport : public CompletionTransport {
 public:
  using Script = std::function<std::string(const QueryRequest&)>;
  explicit ScriptedTransport(Script script, ParseMode mode = ParseMode::Strict, Clock clock = {});
  std::string_view name() const override { return "mock"; }
  std::size_t calls() const;

 protected:
  std::string complete(const QueryRequest& req) override;

 private:
  Script script_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

/// Endpoint and credentials for one provider. from_env reads
/// OPENAI_API_KEY / OPENAI_BASE_URL, ANTHROPIC_API_KEY / ANTHROPIC_BASE_URL,
/// GEMINI_API_KEY / GEMINI_BASE_URL.
struct ProviderConfig {
  std::string id;
  std::string base_url;
  std::string api_key;

  static ProviderConfig from_env(const std::string& provider);
};

/// Chat-completion request over HTTP(S).
class HttpTransport : public CompletionTransport {
 public:
  explicit HttpTransport(ProviderConfig config, ParseMode mode = ParseMode::Strict, Clock clock = {});
  std::string_view name() const override { return "live"; }

 protected:
  std::string complete(const QueryRequest& req) override;

 private:
  ProviderConfig config_;
};

struct HarnessOptions {
  std::size_t concurrency = 4;
  std::chrono::milliseconds backoff_base{500};
  /// Minimum spacing between request starts; 0 disables the limiter.
  double requests_per_second = 0.0;
};

/// Runs one request with retry on Timeout/RateLimited (exponential backoff,
/// up to req.max_retries retries). Fresh entries are appended to `store`.
TranscriptEntry execute_query(const QueryRequest& req, Transport& transport, TranscriptStore* store,
                              const HarnessOptions& options = {});

struct RunError {
  std::size_t bundle_index = 0;
  Domain domain = Domain::Sociology;
  int counterbalance = 1;
  TaskId task_id = TaskId::I;
  std::string request_hash;
  std::string message;
};

struct ExperimentReport {
  std::vector<JudgmentRecord> records;  // input order, failures skipped
  std::vector<RunError> errors;
};

/// One query per bundle. Per-item failures are collected in the report;
/// only Error(StoreCorruption) aborts the run.
ExperimentReport run_experiment(std::span<const PromptBundle> bundles, const QueryRequest& request_template,
                                Transport& transport, TranscriptStore* store, const HarnessOptions& options = {});

}  // namespace collider
