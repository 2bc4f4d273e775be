// endpoint.hpp -- configuration for an OpenAI-compatible completion endpoint.
#pragma once

#include <string>

namespace pacr::gw {

struct RetryPolicy {
  int max_attempts = 3;
  int initial_delay_ms = 250;   // 0 disables sleeping between attempts
  double backoff = 2.0;
};

// Two sampling modes with different defaults: the cheap "nonthinking" model
// answers directly, the "thinking" expert reasons first.  Explicit values in
// the config override the mode defaults.
struct EndpointConfig {
  std::string base_url;      // e.g. "http://127.0.0.1:8000/v1"
  std::string api_key_env;   // name of the env var holding the key; empty -> no auth
  std::string model;
  std::string mode = "nonthinking";  // "nonthinking" | "thinking"
  double temperature = -1.0;         // < 0 -> mode default
  double top_p = -1.0;
  int top_k = -1;
  double min_p = -1.0;
  int max_tokens = 0;                // 0 -> omit from requests
  bool want_logprobs = true;
  int timeout_sec = 120;
  RetryPolicy retry;
  std::string cache_dir;             // empty -> caching disabled

  // Fills unset sampling knobs from the mode defaults and validates.
  void finalize();

  static EndpointConfig from_json_text(const std::string& text);
  static EndpointConfig from_json_file(const std::string& path);
};

}  // namespace pacr::gw
