// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reer/errors.hpp"

namespace reer {

enum class Endpoint { kCompletion, kChat };

struct CompletionRequest {
  std::string model;
  std::string prompt;
  int max_new_tokens = 0;
  bool echo = false;
  bool want_logprobs = false;
  nlohmann::json sampling = nlohmann::json::object();
  Endpoint endpoint = Endpoint::kCompletion;

  /// Scoring shape: no new tokens, prompt echoed with logprobs.
  static CompletionRequest scoring(std::string model, std::string prompt);
  static CompletionRequest generation(std::string model, std::string prompt,
                                      int max_new_tokens, nlohmann::json sampling,
                                      Endpoint endpoint = Endpoint::kCompletion);

  bool is_scoring_shape() const;

  nlohmann::json to_json() const;
  /// SHA-256 of the canonical JSON of every field.
  std::string request_hash() const;
};

struct TokenLogprob {
  std::string token;
  std::optional<double> logprob;  // the first echoed token usually has none
  std::size_t offset = 0;          // code point offset into the echoed text
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct BackendReply {
  std::optional<std::string> text;
  std::optional<std::vector<TokenLogprob>> echoed_token_logprobs;
  Usage usage;
  double latency_ms = 0.0;
  int attempts = 1;

  nlohmann::json to_json() const;
  static BackendReply from_json(const nlohmann::json& j);
  /// Canonical serialization (sorted keys, no whitespace).
  std::string serialize() const;
};

/// A text-completion transport. Implementations must be safe to call from
/// several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply call(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Checks the scoring shape, calls the backend, and validates that the echo
/// covers the prompt. Throws kProtocol when logprobs are missing and
/// kTruncation when the echoed text differs from the prompt.
BackendReply complete_with_logprobs(Backend& backend, const CompletionRequest& request);

/// Requires max_new_tokens > 0; throws kProtocol when the reply has no text.
BackendReply generate_text(Backend& backend, const CompletionRequest& request);

/// Logprobs of the echoed tokens that start at or after `boundary` (a code
/// point offset). Throws kProtocol if any selected token lacks a logprob or
/// none are selected.
std::vector<double> slice_logprobs_from(const BackendReply& reply, std::size_t boundary);

// ---------------------------------------------------------------------------
// Test and offline backends.

/// Replies looked up by request hash or by exact prompt. Unknown requests
/// throw kMissingFixture. Failures can be injected ahead of real replies.
class ScriptedBackend : public Backend {
 public:
  void on_request(const CompletionRequest& request, BackendReply reply);
  /// Successive calls with this prompt return the texts in order; the last
  /// one repeats.
  void on_prompt(const std::string& prompt, std::vector<std::string> texts);
  /// Scoring replies for this prompt echo it with the given per-token
  /// logprobs and offsets.
  void on_prompt_logprobs(const std::string& prompt, std::vector<TokenLogprob> tokens);
  /// The next `count` calls throw `code` before any lookup.
  void fail_next(std::size_t count, ErrorCode code);
  /// Every call sleeps this long first (for concurrency harnesses).
  void set_delay(std::chrono::milliseconds delay);

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override { return "scripted"; }

  std::size_t calls() const { return calls_.load(); }
  std::size_t max_in_flight() const { return max_in_flight_.load(); }

 private:
  mutable std::mutex mu_;
  std::map<std::string, BackendReply> by_hash_;
  std::map<std::string, std::vector<std::string>> by_prompt_;
  std::map<std::string, std::size_t> prompt_cursor_;
  std::map<std::string, std::vector<TokenLogprob>> logprobs_by_prompt_;
  std::size_t pending_failures_ = 0;
  ErrorCode failure_code_ = ErrorCode::kTransport;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

/// Offline generator that answers the packaged initial-thinking and
/// segment-edit prompts with seeded, reproducible text. Plans are short;
/// refinements extend the target paragraph with a reflective trigger and
/// short phrases (at most three words each) borrowed from the target output,
/// so they never trip the no-copy check. Replies depend only on the request
/// hash. Scoring requests are rejected.
class DeterministicBackend : public Backend {
 public:
  struct Options {
    std::size_t plan_paragraphs = 3;
    std::size_t phrases_per_refinement = 3;
  };

  DeterministicBackend() = default;
  explicit DeterministicBackend(Options options) : options_(options) {}

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override { return "deterministic"; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::string plan(const std::string& prompt, std::uint64_t seed) const;
  std::string refine(const std::string& prompt, std::uint64_t seed) const;

  Options options_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Decorators.

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{10000};
};

/// Retries transport errors with exponential backoff. The reply records the
/// attempt count.
class RetryingBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RetryingBackend(std::shared_ptr<Backend> inner, RetryPolicy policy, Sleeper sleeper = {});

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<Backend> inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

/// Caps the number of concurrent upstream calls.
class LimitedBackend : public Backend {
 public:
  LimitedBackend(std::shared_ptr<Backend> inner, std::size_t max_in_flight);

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::size_t limit_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
};

/// Content-addressed reply cache: one file per request hash under
/// `<root>/<hash[0:2]>/<hash>.json`. Concurrent misses on one key share a
/// single upstream call. Unreadable entries are treated as misses.
class CachedBackend : public Backend {
 public:
  CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path root);

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override { return inner_->id(); }

  std::filesystem::path path_for(const std::string& hash) const;
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::optional<BackendReply> load(const std::string& hash) const;
  void store(const std::string& hash, const BackendReply& reply) const;

  std::shared_ptr<Backend> inner_;
  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<BackendReply>> pending_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// ---------------------------------------------------------------------------
// Remote transport.

struct HttpConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string completion_path = "/v1/completions";
  std::string chat_path = "/v1/chat/completions";
  std::string api_key_env = "REER_API_KEY";
  double connect_timeout_s = 10.0;
  double read_timeout_s = 600.0;

  nlohmann::json to_json() const;
  static HttpConfig from_json(const nlohmann::json& j);
};

/// Client for OpenAI-style completion and chat endpoints. Network failures and
/// 5xx/429 statuses raise kTransport; malformed bodies raise kProtocol.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);

  BackendReply call(const CompletionRequest& request) override;
  std::string id() const override;

  /// Request body for the configured endpoint; exposed for wire tests.
  static nlohmann::json request_body(const CompletionRequest& request);
  /// Parses a completion or chat response body.
  static BackendReply parse_response(const nlohmann::json& body, Endpoint endpoint,
                                     bool want_logprobs);
  /// Process-wide number of requests put on the wire.
  static std::size_t requests_sent();

 private:
  HttpConfig config_;
};

/// Counts calls and forwards them; used to prove offline runs make no
/// network requests.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}
  BackendReply call(const CompletionRequest& request) override {
    ++calls_;
    return inner_->call(request);
  }
  std::string id() const override { return inner_->id(); }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace reer
