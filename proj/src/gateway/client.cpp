#include "pacr/gateway/client.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pacr/errors.hpp"

namespace pacr::gw {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, possibly empty
};

SplitUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint: base_url must include a scheme: '" + base_url + "'");
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_probability(const std::string& text, double* out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) return false;
  if (!(v >= 0.0 && v <= 1.0)) return false;
  *out = v;
  return true;
}

Completion parse_completion(const std::string& body, bool want_logprobs, bool enforce_tokens) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("endpoint: response is not JSON: ") + e.what());
  }
  Completion c;
  try {
    const json& choice = j.at("choices").at(0);
    c.text = choice.at("message").at("content").get<std::string>();
    if (choice.contains("logprobs") && !choice.at("logprobs").is_null() &&
        choice.at("logprobs").contains("content")) {
      for (const json& tok : choice.at("logprobs").at("content")) {
        double p = std::exp(tok.at("logprob").get<double>());
        if (p > 1.0) p = 1.0;
        if (p <= 0.0) p = 1e-300;
        c.token_probs.push_back(p);
      }
    }
    if (j.contains("usage") && j.at("usage").contains("completion_tokens")) {
      c.completion_tokens = j.at("usage").at("completion_tokens").get<long long>();
      c.token_source = "usage";
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("endpoint: malformed completion payload: ") + e.what());
  }
  if (want_logprobs && c.token_probs.empty())
    throw CapabilityError(
        "endpoint did not return token logprobs; logits scoring needs a backend with "
        "logprobs support");
  if (c.token_source.empty()) {
    if (!c.token_probs.empty()) {
      c.completion_tokens = static_cast<long long>(c.token_probs.size());
      c.token_source = "logprobs";
    } else if (enforce_tokens) {
      throw CapabilityError(
          "endpoint reports neither usage.completion_tokens nor logprobs; token counts "
          "are required for the efficiency report");
    }
  }
  return c;
}

}  // namespace

void EndpointConfig::finalize() {
  if (base_url.empty()) throw ConfigError("endpoint: base_url is required");
  if (model.empty()) throw ConfigError("endpoint: model is required");
  double def_temp, def_top_p, def_min_p;
  int def_top_k;
  if (mode == "nonthinking") {
    def_temp = 0.7; def_top_p = 0.8; def_top_k = 20; def_min_p = 0.0;
  } else if (mode == "thinking") {
    def_temp = 0.6; def_top_p = 0.95; def_top_k = 20; def_min_p = 0.0;
  } else {
    throw ConfigError("endpoint: mode must be 'nonthinking' or 'thinking', got '" + mode + "'");
  }
  if (temperature < 0.0) temperature = def_temp;
  if (top_p < 0.0) top_p = def_top_p;
  if (top_k < 0) top_k = def_top_k;
  if (min_p < 0.0) min_p = def_min_p;
  if (retry.max_attempts < 1) throw ConfigError("endpoint: retry.max_attempts must be >= 1");
}

EndpointConfig EndpointConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("endpoint: invalid JSON: ") + e.what());
  }
  EndpointConfig cfg;
  try {
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.model = j.value("model", cfg.model);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.top_p = j.value("top_p", cfg.top_p);
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.min_p = j.value("min_p", cfg.min_p);
    cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
    cfg.want_logprobs = j.value("want_logprobs", cfg.want_logprobs);
    cfg.timeout_sec = j.value("timeout_sec", cfg.timeout_sec);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    if (j.contains("retry")) {
      const json& r = j.at("retry");
      cfg.retry.max_attempts = r.value("max_attempts", cfg.retry.max_attempts);
      cfg.retry.initial_delay_ms = r.value("initial_delay_ms", cfg.retry.initial_delay_ms);
      cfg.retry.backoff = r.value("backoff", cfg.retry.backoff);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("endpoint: mistyped field: ") + e.what());
  }
  cfg.finalize();
  return cfg;
}

EndpointConfig EndpointConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("endpoint: cannot open '" + path + "'");
  return from_json_text(
      std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

OpenAiClient::OpenAiClient(EndpointConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.cache_dir) {
  cfg_.finalize();
}

std::string OpenAiClient::verbalized_system_prompt() {
  return "You are a reasoning assistant. For each question and proposed answer, you must "
         "estimate how likely the proposed answer is correct.";
}

std::string OpenAiClient::verbalized_user_prompt(const std::string& question,
                                                 const std::string& answer) {
  return "Question: " + question + "\nAnswer: " + answer +
         "\nProvide a probability (between 0.0 and 1.0) that your answer is correct. Only "
         "output the probability.";
}

std::string OpenAiClient::post_json(const std::string& path, const std::string& body) {
  const SplitUrl url = split_url(cfg_.base_url);
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("endpoint: env var '" + cfg_.api_key_env + "' is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt < cfg_.retry.max_attempts; ++attempt) {
    if (attempt > 0 && cfg_.retry.initial_delay_ms > 0) {
      const double ms =
          cfg_.retry.initial_delay_ms * std::pow(cfg_.retry.backoff, attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(ms)));
    }
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(cfg_.timeout_sec, 0);
    cli.set_read_timeout(cfg_.timeout_sec, 0);
    ++http_calls_;
    auto res = cli.Post(url.prefix + path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    throw TransportError("endpoint returned status " + std::to_string(res->status) + " for " +
                         path + ": " + res->body.substr(0, 200));
  }
  throw TransportError("endpoint unreachable after " +
                       std::to_string(cfg_.retry.max_attempts) + " attempts (" + last_error +
                       ")");
}

std::string OpenAiClient::post_cached(const std::string& path, const std::string& body,
                                      const std::string& salt, bool* hit) {
  const std::string key = DiskCache::key_for({path, body, salt});
  if (auto cached = cache_.get(key)) {
    ++cache_hits_;
    if (hit) *hit = true;
    return *cached;
  }
  const std::string response = post_json(path, body);
  cache_.put(key, response);
  if (hit) *hit = false;
  return response;
}

Completion OpenAiClient::complete(const std::string& prompt, const std::string& salt) {
  json body{
      {"model", cfg_.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
      {"top_p", cfg_.top_p},
      {"top_k", cfg_.top_k},
      {"min_p", cfg_.min_p},
  };
  if (cfg_.max_tokens > 0) body["max_tokens"] = cfg_.max_tokens;
  if (cfg_.want_logprobs) body["logprobs"] = true;
  bool hit = false;
  const std::string response = post_cached("/chat/completions", body.dump(), salt, &hit);
  Completion c = parse_completion(response, cfg_.want_logprobs, /*enforce_tokens=*/true);
  c.from_cache = hit;
  return c;
}

VerbalizedResult OpenAiClient::verbalized_confidence(const std::string& question,
                                                     const std::string& answer, int trials) {
  if (trials < 1) throw RangeError("verbalized_confidence: trials must be >= 1");
  VerbalizedResult result;
  json body{
      {"model", cfg_.model},
      {"messages",
       json::array({json{{"role", "system"}, {"content", verbalized_system_prompt()}},
                    json{{"role", "user"}, {"content", verbalized_user_prompt(question, answer)}}})},
      {"temperature", cfg_.temperature},
      {"top_p", cfg_.top_p},
      {"top_k", cfg_.top_k},
      {"min_p", cfg_.min_p},
  };
  if (cfg_.max_tokens > 0) body["max_tokens"] = cfg_.max_tokens;
  const std::string body_text = body.dump();
  for (int trial = 0; trial < trials; ++trial) {
    const std::string response =
        post_cached("/chat/completions", body_text, "trial:" + std::to_string(trial), nullptr);
    const Completion c =
        parse_completion(response, /*want_logprobs=*/false, /*enforce_tokens=*/false);
    double p = 0.0;
    if (parse_probability(c.text, &p)) {
      result.confidences.push_back(p);
    } else {
      result.confidences.push_back(0.0);
      result.flags.push_back("verbalized_unparseable_trial" + std::to_string(trial));
    }
  }
  return result;
}

std::vector<double> OpenAiClient::embed(const std::string& text) {
  const json body{{"model", cfg_.model}, {"input", text}};
  const std::string response = post_cached("/embeddings", body.dump(), "", nullptr);
  try {
    const json j = json::parse(response);
    return j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("endpoint: malformed embedding payload: ") + e.what());
  }
}

}  // namespace pacr::gw
