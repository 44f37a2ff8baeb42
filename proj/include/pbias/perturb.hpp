#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pbias/catalog.hpp"

namespace pbias {

enum class ScenarioKind { product, societal, any };

struct SynonymGroup {
    std::vector<std::string> members; // >=2, case-folded-unique across the dictionary
};

struct SynonymDictionary {
    ScenarioKind scenario_kind = ScenarioKind::any;
    std::vector<SynonymGroup> groups;
    std::vector<std::string> warnings; // e.g. a word with more than 7 alternatives

    // Index of the group containing `folded_word`, if any.
    std::optional<std::size_t> group_of(std::string_view folded_word) const;
};

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view s);

SynonymDictionary parse_dictionary(const nlohmann::json& doc);
SynonymDictionary load_dictionary(const std::filesystem::path& path);

struct Replacement {
    std::size_t word_index = 0; // into the whitespace tokenization of the base text
    std::string original;       // core word as it appears in the base text
    std::string substitute;     // emitted core word, capitalization already applied
};

struct Candidate {
    Prompt prompt; // provenance=synonym_replaced, parent_id=base.id
    std::vector<Replacement> replacements;
};

struct CandidateSet {
    Prompt base;
    std::vector<Candidate> candidates;
};

struct ReplaceablePosition {
    std::size_t word_index = 0;
    std::size_t group_index = 0;
    std::size_t core_begin = 0; // byte range of the core word within the base text
    std::size_t core_end = 0;
    std::string core; // as it appears in the text
};

// Whitespace tokens whose core word (leading/trailing punctuation stripped,
// case-folded) belongs to the dictionary, left-to-right.
std::vector<ReplaceablePosition> find_replaceable(const Prompt& base,
                                                  const SynonymDictionary& dict);

// Closed form: sum over non-empty position subsets S with |S| <= max_replacements
// of the product of (group size - 1) over S.
std::uint64_t projected_candidate_count(const std::vector<ReplaceablePosition>& positions,
                                        const SynonymDictionary& dict,
                                        std::size_t max_replacements);

inline constexpr std::uint64_t kDefaultCandidateCap = 100000;

// All synonym-replaced variants of `base`, excluding the all-original
// combination, in mixed-radix counting order (leftmost position is the most
// significant digit; digit 0 keeps the original, digits 1..g-1 walk the
// alternatives in dictionary order). Throws ValidationError when the
// projected count exceeds `cap`.
CandidateSet enumerate_candidates(const Prompt& base, const SynonymDictionary& dict,
                                  std::size_t max_replacements,
                                  std::uint64_t cap = kDefaultCandidateCap);

std::size_t replacement_count(const Candidate& candidate);

// Reapplies a replacement list to the base text. Used by the round-trip
// property test and by consumers that persist replacements only.
std::string apply_replacements(const std::string& base_text,
                               const std::vector<Replacement>& replacements);

nlohmann::json candidate_to_json(const Candidate& candidate);
Candidate candidate_from_json(const nlohmann::json& doc);

} // namespace pbias
