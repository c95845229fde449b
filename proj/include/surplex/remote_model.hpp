#pragma once

#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>

#include "surplex/model.hpp"

namespace surplex {

// Connection settings for a completion endpoint speaking the JSON protocol
// described in remote_model.cpp (POST <base_url>/v1/completions).
struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:8089";
  // Name of the environment variable holding the bearer token; when the
  // variable is set and non-empty, requests carry
  // "Authorization: Bearer <token>".
  std::string auth_env_var = "SURPLEX_API_TOKEN";
  std::size_t max_in_flight = 4;  // bounded concurrent requests
  int max_attempts = 3;           // total tries per request
  double backoff_initial_seconds = 0.25;  // doubles after each failed try
  int timeout_seconds = 30;
  void validate() const;
};

// LanguageModel backed by an HTTP completion endpoint that exposes per-token
// log-probabilities. The four read operations are implemented by translating
// them into completion requests; fine_tune is not possible over this
// transport and throws TransportError.
//
// Read operations are const and safe to call concurrently; an internal
// semaphore bounds the number of in-flight requests (shared across clones).
// Network failures and 5xx responses are retried with exponential backoff up
// to max_attempts; exhaustion, 4xx responses, and malformed replies surface
// as TransportError.
class RemoteModel final : public LanguageModel {
 public:
  RemoteModel(std::shared_ptr<const Vocabulary> vocab, RemoteConfig config);

  ProbVector next_token_distribution(
      std::span<const TokenId> context) const override;
  ProbVector top_n_distribution(std::span<const TokenId> context,
                                std::size_t n = 100) const override;
  double sequence_logprob(std::span<const TokenId> tokens,
                          std::span<const TokenId> context) const override;
  std::vector<TokenId> generate_continuation(
      std::span<const TokenId> prompt, std::size_t max_new_tokens,
      const SamplingConfig& sampling) const override;

  // Remote weights cannot be updated through a completion endpoint.
  [[noreturn]] void fine_tune(std::span<const Document> documents,
                              double weight) override;

  std::unique_ptr<LanguageModel> clone() const override;
  const Vocabulary& vocab() const override { return *vocab_; }

  const RemoteConfig& config() const { return config_; }

 private:
  // POSTs one completion request (JSON text) and returns the response body;
  // applies auth, the in-flight bound, and the retry policy.
  std::string post_completion(const std::string& body) const;

  std::shared_ptr<const Vocabulary> vocab_;
  RemoteConfig config_;
  std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace surplex
