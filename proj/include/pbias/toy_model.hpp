#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pbias/backend.hpp"

namespace pbias {

// splitmix64, used as a counter-based generator: each sample index gets its
// own stream derived from (seed, stream), so samples are order-insensitive
// and bit-reproducible across processes.
class SplitMix64 {
public:
    SplitMix64(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    // Uniform in [0, 1).
    double uniform();

private:
    std::uint64_t state_;
};

// Exact-probability k-order word-level language model. The conditional table
// maps a context of the last k tokens (left-padded, space-joined) to a
// distribution over the vocabulary.
struct ToyModelSpec {
    std::vector<std::string> vocabulary;
    int order = 1;
    std::string pad_symbol = "<s>";
    std::string unk_symbol = "<unk>";
    // context key -> probabilities aligned with `vocabulary`; each row sums
    // to 1 +- 1e-9.
    std::map<std::string, std::vector<double>> table;

    std::string context_key(std::span<const std::string> context) const;
};

ToyModelSpec parse_toy_model(const nlohmann::json& doc);
ToyModelSpec load_toy_model(const std::filesystem::path& path);

// Table lookup on the last k tokens, tempered (p^(1/tau), renormalized).
// tau = 1 returns the table row exactly. Missing contexts fall back to the
// uniform distribution; `fallback_used`, when given, reports that.
std::vector<double> toy_next_distribution(const ToyModelSpec& spec,
                                          std::span<const std::string> context,
                                          double temperature,
                                          bool* fallback_used = nullptr);

class ToyBackend : public Backend {
public:
    explicit ToyBackend(ToyModelSpec spec, std::string name = "toy");

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    const ToyModelSpec& spec() const { return spec_; }

    // Whitespace word-level tokenizer; case-folded; OOV words map to UNK.
    TokenSeq tokenize(const std::string& text) const override;

    std::vector<StepLogprob> score_continuation(const TokenSeq& prompt,
                                                const TokenSeq& continuation,
                                                double logprob_floor) override;

    std::vector<ResponseSample> sample(const SamplingRequest& request) override;

    // Exact next-token distribution given a text prompt (enumeration oracle
    // entry point for tests and calibration checks).
    std::vector<double> next_distribution(std::span<const std::string> context,
                                          double temperature) const;

private:
    ToyModelSpec spec_;
    BackendDescriptor descriptor_;
};

// Deterministic text-hash embedder standing in for a sentence-embedding
// service in offline runs. Identical texts give identical unit vectors.
class HashEmbedder : public Backend {
public:
    explicit HashEmbedder(std::size_t dimension = 32);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    std::vector<double> embed(const std::string& text) override;

private:
    std::size_t dimension_;
    BackendDescriptor descriptor_;
};

} // namespace pbias
