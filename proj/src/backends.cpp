// SPDX-License-Identifier: Apache-2.0
#include "reer/backends.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "reer/hashing.hpp"
#include "reer/text.hpp"

namespace reer {

using nlohmann::json;

namespace {

std::string_view endpoint_name(Endpoint e) { return e == Endpoint::kChat ? "chat" : "completion"; }

}  // namespace

CompletionRequest CompletionRequest::scoring(std::string model, std::string prompt) {
  CompletionRequest r;
  r.model = std::move(model);
  r.prompt = std::move(prompt);
  r.max_new_tokens = 0;
  r.echo = true;
  r.want_logprobs = true;
  return r;
}

CompletionRequest CompletionRequest::generation(std::string model, std::string prompt,
                                                int max_new_tokens, json sampling,
                                                Endpoint endpoint) {
  CompletionRequest r;
  r.model = std::move(model);
  r.prompt = std::move(prompt);
  r.max_new_tokens = max_new_tokens;
  r.sampling = sampling.is_null() ? json::object() : std::move(sampling);
  r.endpoint = endpoint;
  return r;
}

bool CompletionRequest::is_scoring_shape() const {
  return max_new_tokens == 0 && echo && want_logprobs && endpoint == Endpoint::kCompletion;
}

json CompletionRequest::to_json() const {
  return json{{"model", model},
              {"prompt", prompt},
              {"max_new_tokens", max_new_tokens},
              {"echo", echo},
              {"want_logprobs", want_logprobs},
              {"sampling", sampling},
              {"endpoint", endpoint_name(endpoint)}};
}

std::string CompletionRequest::request_hash() const { return sha256_hex(to_json().dump()); }

json BackendReply::to_json() const {
  json j;
  j["text"] = text ? json(*text) : json(nullptr);
  if (echoed_token_logprobs) {
    json toks = json::array();
    for (const auto& t : *echoed_token_logprobs) {
      toks.push_back(json::array({t.token, t.logprob ? json(*t.logprob) : json(nullptr), t.offset}));
    }
    j["echoed_token_logprobs"] = std::move(toks);
  } else {
    j["echoed_token_logprobs"] = nullptr;
  }
  j["usage"] = {{"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens}};
  j["latency_ms"] = latency_ms;
  j["attempts"] = attempts;
  return j;
}

BackendReply BackendReply::from_json(const json& j) {
  BackendReply r;
  if (!j.at("text").is_null()) r.text = j.at("text").get<std::string>();
  const auto& toks = j.at("echoed_token_logprobs");
  if (!toks.is_null()) {
    std::vector<TokenLogprob> out;
    for (const auto& t : toks) {
      TokenLogprob tl;
      tl.token = t.at(0).get<std::string>();
      if (!t.at(1).is_null()) tl.logprob = t.at(1).get<double>();
      tl.offset = t.at(2).get<std::size_t>();
      out.push_back(std::move(tl));
    }
    r.echoed_token_logprobs = std::move(out);
  }
  r.usage.prompt_tokens = j.at("usage").at("prompt_tokens").get<std::size_t>();
  r.usage.completion_tokens = j.at("usage").at("completion_tokens").get<std::size_t>();
  r.latency_ms = j.at("latency_ms").get<double>();
  r.attempts = j.at("attempts").get<int>();
  return r;
}

std::string BackendReply::serialize() const { return to_json().dump(); }

BackendReply complete_with_logprobs(Backend& backend, const CompletionRequest& request) {
  if (!request.is_scoring_shape()) {
    throw Error(ErrorCode::kInvalidArgument,
                "scoring requests need max_new_tokens == 0, echo and logprobs on the completion "
                "endpoint");
  }
  auto reply = backend.call(request);
  if (!reply.echoed_token_logprobs) {
    throw Error(ErrorCode::kProtocol, "backend reply has no echoed logprobs");
  }
  if (!reply.text) throw Error(ErrorCode::kProtocol, "backend reply has no echoed text");
  if (*reply.text != request.prompt) {
    throw Error(ErrorCode::kTruncation, "echoed text (" + std::to_string(reply.text->size()) +
                                            " bytes) differs from the prompt (" +
                                            std::to_string(request.prompt.size()) + " bytes)");
  }
  const auto& toks = *reply.echoed_token_logprobs;
  const std::size_t prompt_len = text::code_point_count(request.prompt);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i > 0 && toks[i].offset < toks[i - 1].offset) {
      throw Error(ErrorCode::kProtocol, "echoed token offsets decrease at token " + std::to_string(i));
    }
    if (toks[i].offset >= prompt_len && prompt_len > 0) {
      throw Error(ErrorCode::kProtocol, "echoed token offset beyond the prompt");
    }
  }
  if (prompt_len > 0 && (toks.empty() || toks.front().offset != 0)) {
    throw Error(ErrorCode::kProtocol, "echoed tokens do not cover the start of the prompt");
  }
  return reply;
}

BackendReply generate_text(Backend& backend, const CompletionRequest& request) {
  if (request.max_new_tokens <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "generation requests need max_new_tokens > 0");
  }
  auto reply = backend.call(request);
  if (!reply.text) throw Error(ErrorCode::kProtocol, "backend reply has no generated text");
  return reply;
}

std::vector<double> slice_logprobs_from(const BackendReply& reply, std::size_t boundary) {
  if (!reply.echoed_token_logprobs) {
    throw Error(ErrorCode::kProtocol, "backend reply has no echoed logprobs");
  }
  std::vector<double> out;
  for (const auto& t : *reply.echoed_token_logprobs) {
    if (t.offset < boundary) continue;
    if (!t.logprob) {
      throw Error(ErrorCode::kProtocol, "token at offset " + std::to_string(t.offset) +
                                            " has no logprob");
    }
    out.push_back(*t.logprob);
  }
  if (out.empty()) throw Error(ErrorCode::kProtocol, "no echoed tokens at or after the boundary");
  return out;
}

// ---------------------------------------------------------------------------
// ScriptedBackend

void ScriptedBackend::on_request(const CompletionRequest& request, BackendReply reply) {
  std::lock_guard lock(mu_);
  by_hash_[request.request_hash()] = std::move(reply);
}

void ScriptedBackend::on_prompt(const std::string& prompt, std::vector<std::string> texts) {
  std::lock_guard lock(mu_);
  by_prompt_[prompt] = std::move(texts);
  prompt_cursor_[prompt] = 0;
}

void ScriptedBackend::on_prompt_logprobs(const std::string& prompt,
                                         std::vector<TokenLogprob> tokens) {
  std::lock_guard lock(mu_);
  logprobs_by_prompt_[prompt] = std::move(tokens);
}

void ScriptedBackend::fail_next(std::size_t count, ErrorCode code) {
  std::lock_guard lock(mu_);
  pending_failures_ = count;
  failure_code_ = code;
}

void ScriptedBackend::set_delay(std::chrono::milliseconds delay) {
  std::lock_guard lock(mu_);
  delay_ = delay;
}

BackendReply ScriptedBackend::call(const CompletionRequest& request) {
  ++calls_;
  const std::size_t now = ++in_flight_;
  std::size_t seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { --n; }
  } leave{in_flight_};

  std::chrono::milliseconds delay;
  {
    std::lock_guard lock(mu_);
    delay = delay_;
  }
  if (delay.count() > 0) std::this_thread::sleep_for(delay);

  std::lock_guard lock(mu_);
  if (pending_failures_ > 0) {
    --pending_failures_;
    throw Error(failure_code_, "scripted failure");
  }
  if (auto it = by_hash_.find(request.request_hash()); it != by_hash_.end()) return it->second;
  if (request.want_logprobs) {
    if (auto it = logprobs_by_prompt_.find(request.prompt); it != logprobs_by_prompt_.end()) {
      BackendReply r;
      r.text = request.prompt;
      r.echoed_token_logprobs = it->second;
      r.usage.prompt_tokens = it->second.size();
      return r;
    }
  }
  if (auto it = by_prompt_.find(request.prompt); it != by_prompt_.end() && !it->second.empty()) {
    auto& cursor = prompt_cursor_[request.prompt];
    const auto& texts = it->second;
    BackendReply r;
    r.text = texts[std::min(cursor, texts.size() - 1)];
    ++cursor;
    r.usage.prompt_tokens = text::word_count(request.prompt);
    r.usage.completion_tokens = text::word_count(*r.text);
    return r;
  }
  throw Error(ErrorCode::kMissingFixture,
              "no scripted reply for request " + request.request_hash().substr(0, 16));
}

// ---------------------------------------------------------------------------
// RetryingBackend

RetryingBackend::RetryingBackend(std::shared_ptr<Backend> inner, RetryPolicy policy,
                                 Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleeper_(std::move(sleeper)) {
  if (policy_.max_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "retry policy needs max_attempts >= 1");
  }
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

BackendReply RetryingBackend::call(const CompletionRequest& request) {
  auto backoff = policy_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      auto reply = inner_->call(request);
      reply.attempts = attempt;
      return reply;
    } catch (const Error& e) {
      if (!is_retryable(e.code()) || attempt >= policy_.max_attempts) throw;
    }
    sleeper_(backoff);
    const auto next = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy_.multiplier));
    backoff = std::min(next, policy_.max_backoff);
  }
}

// ---------------------------------------------------------------------------
// LimitedBackend

LimitedBackend::LimitedBackend(std::shared_ptr<Backend> inner, std::size_t max_in_flight)
    : inner_(std::move(inner)), limit_(max_in_flight) {
  if (limit_ == 0) throw Error(ErrorCode::kInvalidArgument, "in-flight limit must be >= 1");
}

BackendReply LimitedBackend::call(const CompletionRequest& request) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }
  struct Release {
    LimitedBackend& self;
    ~Release() {
      {
        std::lock_guard lock(self.mu_);
        --self.in_flight_;
      }
      self.cv_.notify_one();
    }
  } release{*this};
  return inner_->call(request);
}

// ---------------------------------------------------------------------------
// CachedBackend

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path root)
    : inner_(std::move(inner)), root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create cache root '" + root_.string() + "': " + ec.message());
  }
}

std::filesystem::path CachedBackend::path_for(const std::string& hash) const {
  return root_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<BackendReply> CachedBackend::load(const std::string& hash) const {
  const auto path = path_for(hash);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return BackendReply::from_json(json::parse(ss.str()));
  } catch (const std::exception& e) {
    std::cerr << "warning: corrupt cache entry " << path.string() << " (" << e.what()
              << "), treating as miss\n";
    return std::nullopt;
  }
}

void CachedBackend::store(const std::string& hash, const BackendReply& reply) const {
  const auto path = path_for(hash);
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << reply.serialize();
    if (!out) throw Error(ErrorCode::kIo, "cannot write cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BackendReply CachedBackend::call(const CompletionRequest& request) {
  const auto hash = request.request_hash();
  if (auto hit = load(hash)) {
    ++hits_;
    return *hit;
  }
  std::promise<BackendReply> promise;
  std::shared_future<BackendReply> shared;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (auto it = pending_.find(hash); it != pending_.end()) {
      shared = it->second;
    } else if (auto hit = load(hash)) {
      ++hits_;
      return *hit;
    } else {
      shared = promise.get_future().share();
      pending_.emplace(hash, shared);
      owner = true;
    }
  }
  if (!owner) {
    ++hits_;
    return shared.get();
  }
  ++misses_;
  try {
    auto reply = inner_->call(request);
    store(hash, reply);
    promise.set_value(reply);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(mu_);
    pending_.erase(hash);
  }
  return shared.get();
}

}  // namespace reer
