#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pbias/backend.hpp"
#include "pbias/catalog.hpp"
#include "pbias/perturb.hpp"

namespace pbias {

// The set T of tokenized target sequences whose union next-tokens probability
// defines the loss. Prefix-deduplicated: no surviving sequence is a strict
// prefix of another, so the per-sequence events are pairwise disjoint and the
// union probability is an exact sum.
struct TargetSet {
    std::string concept_id;
    std::vector<TokenSeq> sequences;

    std::size_t max_sequence_length() const;
};

enum class Direction { minimize, maximize };

std::string to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct LossConfig {
    int horizon = 1;               // >= longest sequence in the scored TargetSet
    Direction direction = Direction::minimize;
    double logprob_floor = -50.0;  // per-token clamp for zero probabilities
};

struct LossValue {
    double value = 0.0;            // -ln(union_probability) when not clamped
    double union_probability = 0.0;
    bool clamped = false;
};

struct VariantPolicy {
    bool verbatim = true;
    bool leading_space = true;
    bool lowercase = false; // off by default: target words are proper nouns
};

// Expands each target word per the variant policy, tokenizes, and
// prefix-deduplicates keeping the shorter sequence.
TargetSet build_target_set(const Concept& target_concept, const Backend& tokenizer,
                           const VariantPolicy& variants = {});

// Exposed for tests: drops duplicates and any sequence that has a strict
// prefix in the set, preserving first-occurrence order.
std::vector<TokenSeq> prefix_deduplicate(std::vector<TokenSeq> sequences);

// Teacher-forced sum of per-token logprobs. `clamped`, when given, reports
// whether any step hit the floor.
double sequence_logprob(const TokenSeq& prompt, const TokenSeq& continuation,
                        Backend& backend, double logprob_floor,
                        bool* clamped = nullptr);

LossValue target_set_loss(const TokenSeq& prompt, const TargetSet& targets,
                          const LossConfig& cfg, Backend& backend);

struct SelectionResult {
    std::size_t chosen_index = 0; // into CandidateSet::candidates
    Prompt chosen;
    std::vector<LossValue> losses; // enumeration order
};

// Argmin (or argmax under maximize) of the loss over all candidates; ties go
// to the earlier candidate in enumeration order.
SelectionResult select_candidate(const CandidateSet& set, const TargetSet& targets,
                                 const LossConfig& cfg, Backend& backend);

} // namespace pbias
