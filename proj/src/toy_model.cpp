#include "pbias/toy_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::string fold_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
        return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    });
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream)
    : state_(seed ^ (stream * kGolden + 0x1ull)) {
    // One warm-up scramble so nearby (seed, stream) pairs decorrelate.
    next();
}

std::uint64_t SplitMix64::next() {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::string ToyModelSpec::context_key(std::span<const std::string> context) const {
    const std::size_t k = static_cast<std::size_t>(order);
    std::string key;
    const std::size_t have = std::min(k, context.size());
    for (std::size_t i = 0; i < k - have; ++i) {
        if (!key.empty()) key += ' ';
        key += pad_symbol;
    }
    for (std::size_t i = context.size() - have; i < context.size(); ++i) {
        if (!key.empty()) key += ' ';
        key += context[i];
    }
    return key;
}

ToyModelSpec parse_toy_model(const nlohmann::json& doc) {
    ToyModelSpec spec;
    try {
        spec.vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
        spec.order = doc.at("order").get<int>();
        spec.pad_symbol = doc.value("pad_symbol", spec.pad_symbol);
        spec.unk_symbol = doc.value("unk_symbol", spec.unk_symbol);
        for (const auto& [key, row_doc] : doc.at("table").items()) {
            std::vector<double> row(spec.vocabulary.size(), 0.0);
            for (const auto& [word, prob] : row_doc.items()) {
                auto it = std::find(spec.vocabulary.begin(), spec.vocabulary.end(), word);
                if (it == spec.vocabulary.end())
                    throw ValidationError("toy model row '" + key +
                                          "' references unknown word: " + word);
                row[static_cast<std::size_t>(it - spec.vocabulary.begin())] =
                    prob.get<double>();
            }
            spec.table.emplace(key, std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed toy model: ") + e.what());
    }

    if (spec.order < 1) throw ValidationError("toy model order must be >= 1");
    if (spec.vocabulary.empty()) throw ValidationError("toy model vocabulary is empty");
    for (const auto& [key, row] : spec.table) {
        double sum = std::accumulate(row.begin(), row.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("toy model row '" + key + "' sums to " +
                                  std::to_string(sum) + ", not 1");
        for (double p : row)
            if (p < 0.0)
                throw ValidationError("toy model row '" + key +
                                      "' has a negative probability");
    }
    return spec;
}

ToyModelSpec load_toy_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open toy model file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("toy model " + path.string() + ": " + e.what());
    }
    return parse_toy_model(doc);
}

std::vector<double> toy_next_distribution(const ToyModelSpec& spec,
                                          std::span<const std::string> context,
                                          double temperature, bool* fallback_used) {
    if (temperature <= 0.0)
        throw ValidationError("temperature must be > 0");
    if (fallback_used) *fallback_used = false;

    std::vector<double> row;
    auto it = spec.table.find(spec.context_key(context));
    if (it == spec.table.end()) {
        if (fallback_used) *fallback_used = true;
        row.assign(spec.vocabulary.size(), 1.0 / static_cast<double>(spec.vocabulary.size()));
    } else {
        row = it->second;
    }

    if (temperature == 1.0) return row;

    // logits = ln p, rescaled by 1/tau, renormalized: p_i^(1/tau) / Z.
    double z = 0.0;
    for (double& p : row) {
        p = p > 0.0 ? std::pow(p, 1.0 / temperature) : 0.0;
        z += p;
    }
    for (double& p : row) p /= z;
    return row;
}

ToyBackend::ToyBackend(ToyModelSpec spec, std::string name) : spec_(std::move(spec)) {
    descriptor_.name = std::move(name);
    descriptor_.caps = {.tokenize = true, .exact_logprobs = true, .sample = true,
                        .embed = false};
    descriptor_.default_temperature = 1.0;
}

TokenSeq ToyBackend::tokenize(const std::string& text) const {
    TokenSeq seq;
    seq.rendered = text;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        const std::string folded = fold_copy(word);
        auto it = std::find(spec_.vocabulary.begin(), spec_.vocabulary.end(), folded);
        if (it == spec_.vocabulary.end()) {
            seq.ids.push_back(-1);
            seq.texts.push_back(spec_.unk_symbol);
        } else {
            seq.ids.push_back(static_cast<int>(it - spec_.vocabulary.begin()));
            seq.texts.push_back(folded);
        }
    }
    return seq;
}

std::vector<StepLogprob> ToyBackend::score_continuation(const TokenSeq& prompt,
                                                        const TokenSeq& continuation,
                                                        double logprob_floor) {
    std::vector<std::string> context = prompt.texts;
    std::vector<StepLogprob> steps;
    steps.reserve(continuation.size());
    for (std::size_t i = 0; i < continuation.size(); ++i) {
        const auto dist = toy_next_distribution(spec_, context, 1.0);
        const int id = i < continuation.ids.size() ? continuation.ids[i] : -1;
        double p = id >= 0 ? dist[static_cast<std::size_t>(id)] : 0.0;
        if (p > 0.0) {
            steps.push_back({std::log(p), false});
        } else {
            steps.push_back({logprob_floor, true});
        }
        context.push_back(continuation.texts[i]);
    }
    return steps;
}

std::vector<ResponseSample> ToyBackend::sample(const SamplingRequest& request) {
    if (request.n < 1 || request.max_tokens < 1)
        throw ValidationError("sampling request needs n >= 1 and max_tokens >= 1");
    const double tau = request.temperature.value_or(1.0);
    const std::uint64_t seed = request.seed.value_or(0);
    const TokenSeq prompt = tokenize(request.prompt_text);

    std::vector<ResponseSample> samples;
    samples.reserve(static_cast<std::size_t>(request.n));
    for (int i = 0; i < request.n; ++i) {
        SplitMix64 rng(seed, static_cast<std::uint64_t>(request.start_index + i));
        std::vector<std::string> context = prompt.texts;
        ResponseSample sample;
        for (int t = 0; t < request.max_tokens; ++t) {
            const auto dist = toy_next_distribution(spec_, context, tau);
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t pick = dist.size() - 1;
            for (std::size_t v = 0; v < dist.size(); ++v) {
                acc += dist[v];
                if (u < acc) {
                    pick = v;
                    break;
                }
            }
            const std::string& word = spec_.vocabulary[pick];
            sample.token_texts.push_back(sample.token_texts.empty() ? word : " " + word);
            sample.text += sample.token_texts.back();
            context.push_back(word);
        }
        sample.finish_reason = FinishReason::length;
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<double> ToyBackend::next_distribution(std::span<const std::string> context,
                                                  double temperature) const {
    return toy_next_distribution(spec_, context, temperature);
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    descriptor_.name = "toy-hash-embedder";
    descriptor_.caps = {.tokenize = false, .exact_logprobs = false, .sample = false,
                        .embed = true};
}

std::vector<double> HashEmbedder::embed(const std::string& text) {
    SplitMix64 rng(fnv1a64(text), 0);
    std::vector<double> v(dimension_);
    double norm_sq = 0.0;
    for (double& x : v) {
        x = 2.0 * rng.uniform() - 1.0;
        norm_sq += x * x;
    }
    if (norm_sq == 0.0) {
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

} // namespace pbias
