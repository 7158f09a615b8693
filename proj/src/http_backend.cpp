// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>

#include "reer/backends.hpp"

namespace reer {

using nlohmann::json;

json HttpConfig::to_json() const {
  return json{{"base_url", base_url},
              {"completion_path", completion_path},
              {"chat_path", chat_path},
              {"api_key_env", api_key_env},
              {"connect_timeout_s", connect_timeout_s},
              {"read_timeout_s", read_timeout_s}};
}

HttpConfig HttpConfig::from_json(const json& j) {
  HttpConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.completion_path = j.value("completion_path", c.completion_path);
  c.chat_path = j.value("chat_path", c.chat_path);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.connect_timeout_s = j.value("connect_timeout_s", c.connect_timeout_s);
  c.read_timeout_s = j.value("read_timeout_s", c.read_timeout_s);
  return c;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {}

std::string HttpBackend::id() const { return "http:" + config_.base_url; }

json HttpBackend::request_body(const CompletionRequest& request) {
  json body;
  body["model"] = request.model;
  if (request.endpoint == Endpoint::kChat) {
    if (request.want_logprobs || request.echo) {
      throw Error(ErrorCode::kInvalidArgument, "the chat endpoint cannot echo prompt logprobs");
    }
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  } else {
    body["prompt"] = request.prompt;
    body["echo"] = request.echo;
    if (request.want_logprobs) body["logprobs"] = 1;
  }
  body["max_tokens"] = request.max_new_tokens;
  for (const auto& [k, v] : request.sampling.items()) body[k] = v;
  return body;
}

BackendReply HttpBackend::parse_response(const json& body, Endpoint endpoint, bool want_logprobs) {
  BackendReply reply;
  try {
    const auto& choice = body.at("choices").at(0);
    if (endpoint == Endpoint::kChat) {
      reply.text = choice.at("message").at("content").get<std::string>();
    } else {
      reply.text = choice.at("text").get<std::string>();
      if (want_logprobs) {
        const auto& lp = choice.at("logprobs");
        if (lp.is_null()) throw Error(ErrorCode::kProtocol, "response has null logprobs");
        const auto& tokens = lp.at("tokens");
        const auto& logprobs = lp.at("token_logprobs");
        const auto& offsets = lp.at("text_offset");
        if (tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
          throw Error(ErrorCode::kProtocol, "logprob arrays differ in length");
        }
        std::vector<TokenLogprob> out;
        out.reserve(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          TokenLogprob t;
          t.token = tokens[i].get<std::string>();
          if (!logprobs[i].is_null()) t.logprob = logprobs[i].get<double>();
          t.offset = offsets[i].get<std::size_t>();
          out.push_back(std::move(t));
        }
        reply.echoed_token_logprobs = std::move(out);
      }
    }
    if (body.contains("usage") && body["usage"].is_object()) {
      reply.usage.prompt_tokens = body["usage"].value("prompt_tokens", std::size_t{0});
      reply.usage.completion_tokens = body["usage"].value("completion_tokens", std::size_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed response: ") + e.what());
  }
  return reply;
}

namespace {
std::atomic<std::size_t> g_requests_sent{0};
}  // namespace

std::size_t HttpBackend::requests_sent() { return g_requests_sent.load(); }

BackendReply HttpBackend::call(const CompletionRequest& request) {
  const auto body = request_body(request);
  ++g_requests_sent;
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.connect_timeout_s)));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.read_timeout_s)));
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto& path =
      request.endpoint == Endpoint::kChat ? config_.chat_path : config_.completion_path;
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path, headers, body.dump(), "application/json");
  const auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (!res) {
    throw Error(ErrorCode::kTransport, "request to " + config_.base_url + path +
                                           " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::kTransport, "server returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProtocol, "server returned HTTP " + std::to_string(res->status) + ": " +
                                          res->body.substr(0, 200));
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("response is not JSON: ") + e.what());
  }
  auto reply = parse_response(parsed, request.endpoint, request.want_logprobs);
  reply.latency_ms = elapsed;
  return reply;
}

}  // namespace reer
