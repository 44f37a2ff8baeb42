#include "pbias/http_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

EndpointConfig parse_endpoint_config(const nlohmann::json& doc) {
    EndpointConfig cfg;
    try {
        cfg.base_url = doc.at("base_url").get<std::string>();
        cfg.api_key_env = doc.value("api_key_env", "");
        cfg.model = doc.at("model").get<std::string>();
        cfg.timeout_s = doc.value("timeout_s", cfg.timeout_s);
        cfg.rps = doc.value("rps", cfg.rps);
        if (doc.contains("capabilities")) {
            cfg.caps = {};
            for (const auto& c : doc.at("capabilities")) {
                const auto s = c.get<std::string>();
                if (s == "exact_logprobs") cfg.caps.exact_logprobs = true;
                else if (s == "sample") cfg.caps.sample = true;
                else if (s == "embed") cfg.caps.embed = true;
                else throw ParseError("unknown endpoint capability: " + s);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed endpoint config: ") + e.what());
    }
    if (cfg.timeout_s <= 0.0)
        throw ValidationError("endpoint timeout_s must be > 0");
    return cfg;
}

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open endpoint config: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("endpoint config " + path.string() + ": " + e.what());
    }
    return parse_endpoint_config(doc);
}

RateLimiter::RateLimiter(double requests_per_second)
    : rps_(requests_per_second), tokens_(requests_per_second),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rps_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(rps_, tokens_ + rps_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait_s = (1.0 - tokens_) / rps_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        lock.lock();
    }
}

ParsedLogprobs parse_completion_logprobs(const nlohmann::json& body,
                                         std::size_t prompt_chars,
                                         double logprob_floor) {
    ParsedLogprobs out;
    try {
        const auto& choice = body.at("choices").at(0);
        if (!choice.contains("logprobs") || choice.at("logprobs").is_null())
            throw CapabilityError("endpoint returned no logprobs (echo unsupported?)");
        const auto& lp = choice.at("logprobs");
        const auto& tokens = lp.at("tokens");
        const auto& logprobs = lp.at("token_logprobs");
        const auto& offsets = lp.at("text_offset");
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (offsets.at(i).get<std::size_t>() < prompt_chars) continue;
            out.tokens.push_back(tokens.at(i).get<std::string>());
            if (logprobs.at(i).is_null())
                out.logprobs.push_back({logprob_floor, true});
            else
                out.logprobs.push_back({logprobs.at(i).get<double>(), false});
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected completion response shape: ") +
                           e.what());
    }
    return out;
}

std::vector<ResponseSample> parse_chat_samples(const nlohmann::json& body) {
    std::vector<ResponseSample> samples;
    try {
        for (const auto& choice : body.at("choices")) {
            ResponseSample sample;
            sample.text = choice.at("message").at("content").get<std::string>();
            sample.finish_reason = choice.value("finish_reason", "stop") == "length"
                                       ? FinishReason::length
                                       : FinishReason::stop;
            if (choice.contains("logprobs") && !choice.at("logprobs").is_null() &&
                choice.at("logprobs").contains("content")) {
                for (const auto& tok : choice.at("logprobs").at("content"))
                    sample.token_texts.push_back(tok.at("token").get<std::string>());
            } else {
                sample.token_texts.push_back(sample.text);
            }
            samples.push_back(std::move(sample));
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected chat response shape: ") + e.what());
    }
    return samples;
}

std::vector<double> parse_embedding(const nlohmann::json& body) {
    try {
        return body.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected embedding response shape: ") +
                           e.what());
    }
}

HttpBackend::HttpBackend(EndpointConfig config, RetryPolicy retry)
    : config_(std::move(config)), retry_(std::move(retry)), limiter_(config_.rps) {
    descriptor_.name = "http:" + config_.model;
    descriptor_.caps = config_.caps;
    descriptor_.caps.tokenize = true; // opaque chunks, server-side tokenization
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key) api_key_ = key;
    }
}

HttpBackend::~HttpBackend() = default;

TokenSeq HttpBackend::tokenize(const std::string& text) const {
    TokenSeq seq;
    seq.rendered = text;
    if (!text.empty()) seq.texts.push_back(text);
    return seq;
}

nlohmann::json HttpBackend::post_json(const std::string& path,
                                      const nlohmann::json& payload) {
    std::string last_error;
    for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
        if (attempt > 0) {
            const std::size_t i = static_cast<std::size_t>(attempt - 1);
            const double s = i < retry_.backoff_s.size() ? retry_.backoff_s[i]
                                                         : retry_.backoff_s.back();
            std::this_thread::sleep_for(std::chrono::duration<double>(s));
        }
        limiter_.acquire();

        httplib::Client client(config_.base_url);
        const auto timeout =
            std::chrono::milliseconds(static_cast<long>(config_.timeout_s * 1000));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key_.empty())
            headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(path, headers, payload.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400)
            throw BackendError("HTTP " + std::to_string(res->status) + " from " + path +
                               ": " + res->body);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("invalid JSON from ") + path + ": " +
                               e.what());
        }
    }
    throw BackendError("request to " + path + " failed after " +
                       std::to_string(retry_.attempts) + " attempts: " + last_error);
}

std::vector<StepLogprob> HttpBackend::score_continuation(const TokenSeq& prompt,
                                                         const TokenSeq& continuation,
                                                         double logprob_floor) {
    if (!config_.caps.exact_logprobs)
        throw CapabilityError(descriptor_.name + " does not support exact logprobs");
    const nlohmann::json payload = {{"model", config_.model},
                                    {"prompt", prompt.rendered + continuation.rendered},
                                    {"max_tokens", 0},
                                    {"echo", true},
                                    {"logprobs", 1}};
    const auto body = post_json("/v1/completions", payload);
    return parse_completion_logprobs(body, prompt.rendered.size(), logprob_floor)
        .logprobs;
}

std::vector<ResponseSample> HttpBackend::sample(const SamplingRequest& request) {
    if (!config_.caps.sample)
        throw CapabilityError(descriptor_.name + " does not support sampling");
    nlohmann::json payload = {
        {"model", config_.model},
        {"messages", nlohmann::json::array(
                         {{{"role", "user"}, {"content", request.prompt_text}}})},
        {"max_tokens", request.max_tokens},
        {"n", request.n}};
    if (request.temperature) payload["temperature"] = *request.temperature;
    const auto body = post_json("/v1/chat/completions", payload);
    return parse_chat_samples(body);
}

std::vector<double> HttpBackend::embed(const std::string& text) {
    if (!config_.caps.embed)
        throw CapabilityError(descriptor_.name + " does not support embeddings");
    const nlohmann::json payload = {{"model", config_.model}, {"input", text}};
    auto v = parse_embedding(post_json("/v1/embeddings", payload));
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq <= 0.0) throw BackendError("embedding endpoint returned a zero vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

} // namespace pbias
