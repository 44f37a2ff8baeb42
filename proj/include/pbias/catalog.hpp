#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pbias {

// A target_concept an adversary wants mentioned. Any target word occurring in a
// response counts as a mention.
struct Concept {
    std::string id;
    std::string display_name;
    std::vector<std::string> target_words; // non-empty; phrases allowed ("Trader Joe's")
};

enum class CategoryKind { product, societal };

enum class Provenance { seed, paraphrase, synonym_replaced };

struct Prompt {
    std::string id;
    std::string text;
    Provenance provenance = Provenance::seed;
    std::optional<std::string> parent_id; // required when synonym_replaced
};

struct Category {
    std::string id;
    CategoryKind kind = CategoryKind::product;
    std::vector<Concept> concepts;
    std::vector<Prompt> prompts;

    const Concept* find_concept(std::string_view id) const;
    const Prompt* find_prompt(std::string_view id) const;
};

struct ScenarioCatalog {
    std::string version;
    std::vector<Category> categories;

    const Category* find_category(std::string_view id) const;
};

std::string to_string(CategoryKind kind);
std::string to_string(Provenance p);
CategoryKind category_kind_from_string(std::string_view s);
Provenance provenance_from_string(std::string_view s);

// Throws ValidationError naming the offending entity.
void validate_catalog(const ScenarioCatalog& catalog);

// Throws ParseError on malformed input, ValidationError on invariant breaks.
ScenarioCatalog parse_catalog(const nlohmann::json& doc);
ScenarioCatalog load_catalog(const std::filesystem::path& path);

nlohmann::json catalog_to_json(const ScenarioCatalog& catalog);
nlohmann::json prompt_to_json(const Prompt& prompt);
Prompt prompt_from_json(const nlohmann::json& doc);

// Case-insensitive, boundary-delimited match: the characters immediately
// before and after the matched span must be absent or non-alphanumeric.
// "MacBook," matches; "apple" inside "Pineapple" does not.
bool mention_in_text(std::string_view text, const Concept& target_concept);

// Byte offset of the earliest match start over all target words, if any.
std::optional<std::size_t> first_mention_position(std::string_view text,
                                                  const Concept& target_concept);

} // namespace pbias
