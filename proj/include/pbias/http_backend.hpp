#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pbias/backend.hpp"

namespace pbias {

// Endpoint config: {base_url, api_key_env, model, timeout_s, rps}. The API
// key is read from the named environment variable only, never stored in the
// config file.
struct EndpointConfig {
    std::string base_url;    // e.g. "http://localhost:8089"
    std::string api_key_env; // name of the env var holding the key; may be empty
    std::string model;
    double timeout_s = 30.0;
    double rps = 0.0;        // 0 = unlimited
    Capabilities caps = {.tokenize = false, .exact_logprobs = true, .sample = true,
                         .embed = true};
};

EndpointConfig parse_endpoint_config(const nlohmann::json& doc);
EndpointConfig load_endpoint_config(const std::filesystem::path& path);

struct RetryPolicy {
    int attempts = 3;
    std::vector<double> backoff_s = {0.5, 2.0, 8.0}; // before attempt 2, 3, ...
};

// Token-bucket limiter; thread-safe.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    // Blocks until a token is available. No-op when unlimited.
    void acquire();

private:
    double rps_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

// --- response-body parsers, pure and fixture-testable ---------------------

struct ParsedLogprobs {
    std::vector<std::string> tokens;   // continuation tokens only
    std::vector<StepLogprob> logprobs; // aligned with tokens
};

// Completions response with echo+logprobs: picks out the tokens belonging to
// the continuation, i.e. those whose text_offset >= prompt_chars. Tokens with
// a null logprob (the echoed first token) are clamped at `logprob_floor`.
ParsedLogprobs parse_completion_logprobs(const nlohmann::json& body,
                                         std::size_t prompt_chars,
                                         double logprob_floor);

// Chat-completions response: one ResponseSample per choice. token_texts come
// from logprobs.content when present, otherwise the whole message is a single
// chunk.
std::vector<ResponseSample> parse_chat_samples(const nlohmann::json& body);

// Embeddings response: the raw (not yet normalized) vector of data[0].
std::vector<double> parse_embedding(const nlohmann::json& body);

// --- live adapter ----------------------------------------------------------

// OpenAI-style HTTP adapter: /v1/completions for teacher-forced scoring,
// /v1/chat/completions for sampling, /v1/embeddings for embeddings.
// Transport and 5xx/429 failures are retried with capped exponential backoff;
// 4xx capability problems surface as CapabilityError.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(EndpointConfig config, RetryPolicy retry = {});
    ~HttpBackend() override;

    const BackendDescriptor& descriptor() const override { return descriptor_; }

    // Server-side tokenization: the continuation travels as one opaque chunk
    // and the server reports per-token logprobs under its own tokenizer.
    TokenSeq tokenize(const std::string& text) const override;

    std::vector<StepLogprob> score_continuation(const TokenSeq& prompt,
                                                const TokenSeq& continuation,
                                                double logprob_floor) override;

    std::vector<ResponseSample> sample(const SamplingRequest& request) override;

    std::vector<double> embed(const std::string& text) override;

private:
    nlohmann::json post_json(const std::string& path, const nlohmann::json& payload);

    EndpointConfig config_;
    RetryPolicy retry_;
    BackendDescriptor descriptor_;
    RateLimiter limiter_;
    std::string api_key_;
};

} // namespace pbias
