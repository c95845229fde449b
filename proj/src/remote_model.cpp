// Wire protocol (shared with the test server in tests/support):
//
//   POST <base_url>/v1/completions
//   request JSON:
//     prompt_tokens : [int]   token ids (alternatively "prompt": raw text)
//     max_tokens    : int     continuation budget (0 = score only)
//     logprobs      : int     top-n logprob map size per position (0 = none)
//     echo          : bool    include prompt positions in the response
//     temperature   : number  sampling temperature
//     top_k         : int     sampling truncation
//     seed          : int     sampling stream seed
//     greedy        : bool    argmax decoding
//     stop_at_eos   : bool    stop generation at EOS
//   response JSON:
//     token_ids      : [int]     echoed prompt tokens (if echo) then generated
//     tokens         : [string]  surfaces, parallel to token_ids
//     token_logprobs : [number]  conditional logprob per token_ids entry
//     top_logprobs   : [{id->logprob}] per position, when logprobs > 0

#include "surplex/remote_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "surplex/errors.hpp"

namespace surplex {
namespace {

using nlohmann::json;

json base_request(std::span<const TokenId> tokens) {
  json req;
  req["prompt_tokens"] = json::array();
  for (TokenId id : tokens) req["prompt_tokens"].push_back(id);
  req["max_tokens"] = 0;
  req["logprobs"] = 0;
  req["echo"] = false;
  return req;
}

json parse_response(const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw TransportError("completion endpoint returned malformed JSON");
  }
  return parsed;
}

// Extracts one position's id -> probability map, sorted for ProbVector.
std::vector<ProbEntry> entries_from_logprob_map(const json& map) {
  if (!map.is_object()) {
    throw TransportError("completion response top_logprobs entry is not a map");
  }
  std::vector<ProbEntry> entries;
  entries.reserve(map.size());
  for (const auto& [key, value] : map.items()) {
    TokenId id = 0;
    try {
      id = static_cast<TokenId>(std::stoul(key));
    } catch (const std::exception&) {
      throw TransportError("completion response has non-numeric token id: " +
                           key);
    }
    if (!value.is_number()) {
      throw TransportError("completion response logprob is not a number");
    }
    entries.push_back({id, std::exp(value.get<double>())});
  }
  std::sort(entries.begin(), entries.end(),
            [](const ProbEntry& a, const ProbEntry& b) {
              if (a.prob != b.prob) return a.prob > b.prob;
              return a.token < b.token;
            });
  return entries;
}

const json& last_top_logprobs(const json& response) {
  auto it = response.find("top_logprobs");
  if (it == response.end() || !it->is_array() || it->empty()) {
    throw TransportError("completion response is missing top_logprobs");
  }
  return it->back();
}

}  // namespace

void RemoteConfig::validate() const {
  if (base_url.empty()) throw ConfigError("remote base_url must not be empty");
  if (max_in_flight < 1) {
    throw ConfigError("remote max_in_flight must be at least 1");
  }
  if (max_attempts < 1) {
    throw ConfigError("remote max_attempts must be at least 1");
  }
  if (!(backoff_initial_seconds >= 0.0) ||
      !std::isfinite(backoff_initial_seconds)) {
    throw ConfigError("remote backoff must be a non-negative number");
  }
  if (timeout_seconds < 1) {
    throw ConfigError("remote timeout_seconds must be at least 1");
  }
}

RemoteModel::RemoteModel(std::shared_ptr<const Vocabulary> vocab,
                         RemoteConfig config)
    : vocab_(std::move(vocab)), config_(std::move(config)) {
  if (!vocab_) throw ConfigError("remote model needs a vocabulary");
  config_.validate();
  in_flight_ = std::make_shared<std::counting_semaphore<>>(
      static_cast<std::ptrdiff_t>(config_.max_in_flight));
}

std::string RemoteModel::post_completion(const std::string& body) const {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>* sem;
    ~Release() { sem->release(); }
  } release{in_flight_.get()};

  httplib::Headers headers;
  if (!config_.auth_env_var.empty()) {
    if (const char* token = std::getenv(config_.auth_env_var.c_str());
        token != nullptr && token[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  std::string last_error;
  double backoff = config_.backoff_initial_seconds;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1 && backoff > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    // One client per request: httplib clients serialize requests internally,
    // which would defeat the in-flight bound.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Result result =
        client.Post("/v1/completions", headers, body, "application/json");
    if (!result) {
      last_error = "connection error: " + httplib::to_string(result.error());
      continue;  // retryable
    }
    if (result->status >= 200 && result->status < 300) {
      return result->body;
    }
    const std::string snippet = result->body.substr(0, 200);
    if (result->status >= 500) {
      last_error = "server error " + std::to_string(result->status) +
                   (snippet.empty() ? "" : ": " + snippet);
      continue;  // retryable
    }
    throw TransportError("completion endpoint rejected request with status " +
                         std::to_string(result->status) +
                         (snippet.empty() ? "" : ": " + snippet));
  }
  throw TransportError("completion request failed after " +
                       std::to_string(config_.max_attempts) +
                       " attempts; last " + last_error);
}

ProbVector RemoteModel::next_token_distribution(
    std::span<const TokenId> context) const {
  json req = base_request(context);
  req["max_tokens"] = 1;
  req["logprobs"] = vocab_->size();  // upper bound on the support size
  req["greedy"] = true;
  req["stop_at_eos"] = false;  // the position must exist even when EOS wins
  const json response = parse_response(post_completion(req.dump()));
  return ProbVector::full_vocab(
      entries_from_logprob_map(last_top_logprobs(response)));
}

ProbVector RemoteModel::top_n_distribution(std::span<const TokenId> context,
                                           std::size_t n) const {
  json req = base_request(context);
  req["max_tokens"] = 1;
  req["logprobs"] = n;
  req["greedy"] = true;
  req["stop_at_eos"] = false;  // the position must exist even when EOS wins
  const json response = parse_response(post_completion(req.dump()));
  return ProbVector::top_n(
      entries_from_logprob_map(last_top_logprobs(response)), n);
}

double RemoteModel::sequence_logprob(std::span<const TokenId> tokens,
                                     std::span<const TokenId> context) const {
  if (tokens.empty()) return 0.0;
  std::vector<TokenId> full(context.begin(), context.end());
  full.insert(full.end(), tokens.begin(), tokens.end());
  json req = base_request(full);
  req["echo"] = true;
  const json response = parse_response(post_completion(req.dump()));
  auto it = response.find("token_logprobs");
  if (it == response.end() || !it->is_array() || it->size() != full.size()) {
    throw TransportError(
        "completion response token_logprobs does not cover the prompt");
  }
  double total = 0.0;
  for (std::size_t i = context.size(); i < full.size(); ++i) {
    const json& value = (*it)[i];
    if (!value.is_number()) {
      throw TransportError("completion response is missing a token logprob");
    }
    total += value.get<double>();
  }
  return total;
}

std::vector<TokenId> RemoteModel::generate_continuation(
    std::span<const TokenId> prompt, std::size_t max_new_tokens,
    const SamplingConfig& sampling) const {
  sampling.validate();
  if (max_new_tokens == 0) return {};
  json req = base_request(prompt);
  req["max_tokens"] = max_new_tokens;
  req["temperature"] = sampling.temperature;
  req["top_k"] = sampling.top_k;
  req["seed"] = sampling.seed;
  req["greedy"] = sampling.greedy;
  req["stop_at_eos"] = sampling.stop_at_eos;
  const json response = parse_response(post_completion(req.dump()));
  auto it = response.find("token_ids");
  if (it == response.end() || !it->is_array()) {
    throw TransportError("completion response is missing token_ids");
  }
  std::vector<TokenId> out;
  out.reserve(it->size());
  for (const json& value : *it) {
    if (!value.is_number_unsigned() && !value.is_number_integer()) {
      throw TransportError("completion response token id is not an integer");
    }
    const std::int64_t id = value.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_->size()) {
      throw TransportError("completion response token id out of range: " +
                           std::to_string(id));
    }
    out.push_back(static_cast<TokenId>(id));
  }
  if (out.size() > max_new_tokens) {
    throw TransportError("completion response exceeded max_tokens");
  }
  return out;
}

void RemoteModel::fine_tune(std::span<const Document>, double) {
  throw TransportError(
      "remote backend cannot fine-tune: completion endpoints expose "
      "read-only weights");
}

std::unique_ptr<LanguageModel> RemoteModel::clone() const {
  auto copy =
      std::unique_ptr<RemoteModel>(new RemoteModel(*this));  // shares limiter
  return copy;
}

}  // namespace surplex
