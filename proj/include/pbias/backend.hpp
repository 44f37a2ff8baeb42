#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pbias/errors.hpp"

namespace pbias {

struct Capabilities {
    bool tokenize = false;
    bool exact_logprobs = false;
    bool sample = false;
    bool embed = false;
};

struct BackendDescriptor {
    std::string name;
    Capabilities caps;
    // "unspecified" when the server controls the default (std::nullopt).
    std::optional<double> default_temperature;
};

// A tokenized piece of text. Toy backends fill `ids`; HTTP backends defer to
// the server tokenizer and carry opaque text chunks only.
struct TokenSeq {
    std::vector<int> ids;
    std::vector<std::string> texts;
    std::string rendered;

    std::size_t size() const { return texts.size(); }
    bool empty() const { return texts.empty(); }
};

struct StepLogprob {
    double logprob = 0.0;
    bool clamped = false; // probability was zero / unavailable and got floored
};

struct SamplingRequest {
    std::string prompt_text;
    int n = 1000;
    int max_tokens = 64;
    std::optional<double> temperature; // absent = backend default
    std::optional<std::uint64_t> seed; // toy backend only
    int start_index = 0;               // first sample index (resume support)
};

enum class FinishReason { length, stop };

struct ResponseSample {
    std::string text;
    std::vector<std::string> token_texts; // concatenation equals text
    FinishReason finish_reason = FinishReason::length;
};

// Pluggable model access. Capability-gated: callers check descriptor().caps
// or catch CapabilityError from the default implementations.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    virtual TokenSeq tokenize(const std::string& /*text*/) const {
        throw CapabilityError(descriptor().name + " does not support tokenize");
    }

    // Teacher-forced per-token logprobs of `continuation` given `prompt`.
    // logprob_floor clamps zero-probability steps.
    virtual std::vector<StepLogprob> score_continuation(const TokenSeq& /*prompt*/,
                                                        const TokenSeq& /*continuation*/,
                                                        double /*logprob_floor*/) {
        throw CapabilityError(descriptor().name + " does not support exact logprobs");
    }

    virtual std::vector<ResponseSample> sample(const SamplingRequest& /*request*/) {
        throw CapabilityError(descriptor().name + " does not support sampling");
    }

    // Unit-norm embedding vector.
    virtual std::vector<double> embed(const std::string& /*text*/) {
        throw CapabilityError(descriptor().name + " does not support embeddings");
    }
};

} // namespace pbias
