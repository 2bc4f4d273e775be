// client.hpp -- OpenAI-compatible chat/embeddings client with retries and a
// disk cache.
#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "pacr/gateway/cache.hpp"
#include "pacr/gateway/endpoint.hpp"

namespace pacr::gw {

struct Completion {
  std::string text;
  std::vector<double> token_probs;  // exp(logprob) per generated token
  long long completion_tokens = 0;
  std::string token_source;         // "usage" | "logprobs"
  bool from_cache = false;
};

struct VerbalizedResult {
  std::vector<double> confidences;   // one per trial; unparseable replies -> 0
  std::vector<std::string> flags;    // e.g. "verbalized_unparseable_trial3"
};

class OpenAiClient {
 public:
  explicit OpenAiClient(EndpointConfig cfg);

  // One chat completion for the prompt.  salt distinguishes cache entries for
  // repeated sampling of the same prompt.  Throws TransportError when the
  // backend stays unreachable, CapabilityError when logprobs were requested
  // but the endpoint does not return them.
  Completion complete(const std::string& prompt, const std::string& salt = "");

  // Self-reported correctness probability, sampled over repeated trials.
  VerbalizedResult verbalized_confidence(const std::string& question,
                                         const std::string& answer, int trials);

  std::vector<double> embed(const std::string& text);

  const EndpointConfig& config() const { return cfg_; }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t http_calls() const { return http_calls_.load(); }

  // The exact confidence-elicitation wording; also used by tests to pin the
  // request bytes.
  static std::string verbalized_system_prompt();
  static std::string verbalized_user_prompt(const std::string& question,
                                            const std::string& answer);

 private:
  std::string post_json(const std::string& path, const std::string& body);
  std::string post_cached(const std::string& path, const std::string& body,
                          const std::string& salt, bool* hit);

  EndpointConfig cfg_;
  DiskCache cache_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> http_calls_{0};
};

}  // namespace pacr::gw
