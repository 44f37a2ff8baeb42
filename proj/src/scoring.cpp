#include "pbias/scoring.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>

#include "pbias/errors.hpp"

namespace pbias {

namespace {

bool is_prefix(const std::vector<std::string>& shorter,
               const std::vector<std::string>& longer) {
    if (shorter.size() > longer.size()) return false;
    return std::equal(shorter.begin(), shorter.end(), longer.begin());
}

} // namespace

std::size_t TargetSet::max_sequence_length() const {
    std::size_t longest = 0;
    for (const auto& seq : sequences) longest = std::max(longest, seq.size());
    return longest;
}

std::string to_string(Direction d) {
    return d == Direction::minimize ? "minimize" : "maximize";
}

Direction direction_from_string(std::string_view s) {
    if (s == "minimize") return Direction::minimize;
    if (s == "maximize") return Direction::maximize;
    throw ParseError("unknown direction: " + std::string(s));
}

std::vector<TokenSeq> prefix_deduplicate(std::vector<TokenSeq> sequences) {
    std::vector<TokenSeq> kept;
    for (auto& seq : sequences) {
        if (seq.empty()) continue;
        bool subsumed = false;
        for (const auto& other : kept) {
            if (is_prefix(other.texts, seq.texts)) {
                subsumed = true; // equal or already covered by a shorter prefix
                break;
            }
        }
        if (subsumed) continue;
        // A new shorter sequence subsumes any longer ones kept earlier.
        std::erase_if(kept, [&](const TokenSeq& other) {
            return is_prefix(seq.texts, other.texts);
        });
        kept.push_back(std::move(seq));
    }
    return kept;
}

TargetSet build_target_set(const Concept& target_concept, const Backend& tokenizer,
                           const VariantPolicy& variants) {
    TargetSet set;
    set.concept_id = target_concept.id;
    std::vector<TokenSeq> sequences;
    for (const auto& word : target_concept.target_words) {
        std::vector<std::string> forms;
        if (variants.verbatim) forms.push_back(word);
        if (variants.leading_space) forms.push_back(" " + word);
        if (variants.lowercase) {
            std::string lower = word;
            std::transform(lower.begin(), lower.end(), lower.begin(), [](char c) {
                return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            });
            forms.push_back(lower);
            if (variants.leading_space) forms.push_back(" " + lower);
        }
        for (const auto& form : forms) {
            TokenSeq seq = tokenizer.tokenize(form);
            if (!seq.empty()) sequences.push_back(std::move(seq));
        }
    }
    set.sequences = prefix_deduplicate(std::move(sequences));
    assert(!set.sequences.empty() && "non-empty target_words cannot dedup to nothing");
    return set;
}

double sequence_logprob(const TokenSeq& prompt, const TokenSeq& continuation,
                        Backend& backend, double logprob_floor, bool* clamped) {
    const auto steps = backend.score_continuation(prompt, continuation, logprob_floor);
    double total = 0.0;
    bool any_clamped = false;
    for (const auto& step : steps) {
        total += step.logprob;
        any_clamped |= step.clamped;
    }
    if (clamped) *clamped = any_clamped;
    return total;
}

LossValue target_set_loss(const TokenSeq& prompt, const TargetSet& targets,
                          const LossConfig& cfg, Backend& backend) {
    if (targets.sequences.empty())
        throw ValidationError("target set is empty");
    if (static_cast<std::size_t>(cfg.horizon) < targets.max_sequence_length())
        throw ValidationError("loss horizon shorter than the longest target sequence");

    LossValue result;
    double union_p = 0.0;
    for (const auto& seq : targets.sequences) {
        bool clamped = false;
        const double lp = sequence_logprob(prompt, seq, backend, cfg.logprob_floor,
                                           &clamped);
        result.clamped |= clamped;
        union_p += std::exp(lp);
    }
    if (union_p > 1.0 + 1e-9)
        throw ValidationError("union probability " + std::to_string(union_p) +
                              " exceeds 1; target set not disjoint?");
    union_p = std::min(union_p, 1.0);
    result.union_probability = union_p;
    if (union_p <= 0.0) {
        result.value = -cfg.logprob_floor; // floor in loss units
        result.clamped = true;
    } else {
        result.value = -std::log(union_p);
    }
    return result;
}

SelectionResult select_candidate(const CandidateSet& set, const TargetSet& targets,
                                 const LossConfig& cfg, Backend& backend) {
    if (set.candidates.empty())
        throw ValidationError("candidate set is empty");

    SelectionResult result;
    result.losses.reserve(set.candidates.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
        const TokenSeq prompt = backend.tokenize(set.candidates[i].prompt.text);
        result.losses.push_back(target_set_loss(prompt, targets, cfg, backend));
        const double v = result.losses[i].value;
        const double b = result.losses[best].value;
        const bool better = cfg.direction == Direction::minimize ? v < b : v > b;
        if (better) best = i;
    }
    result.chosen_index = best;
    result.chosen = set.candidates[best].prompt;
    return result;
}

} // namespace pbias
