#include "pbias/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

namespace {

char fold(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string fold_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), fold);
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// All boundary-delimited, case-insensitive occurrences of `word` in `text`,
// returned as start offsets in ascending order. Empty words never match.
std::optional<std::size_t> first_boundary_match(std::string_view text,
                                                std::string_view word) {
    if (word.empty() || word.size() > text.size()) return std::nullopt;
    const std::string folded_text = fold_copy(text);
    const std::string folded_word = fold_copy(word);
    std::size_t pos = 0;
    while ((pos = folded_text.find(folded_word, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + word.size();
        const bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::nullopt;
}

} // namespace

const Concept* Category::find_concept(std::string_view cid) const {
    for (const auto& c : concepts)
        if (c.id == cid) return &c;
    return nullptr;
}

const Prompt* Category::find_prompt(std::string_view pid) const {
    for (const auto& p : prompts)
        if (p.id == pid) return &p;
    return nullptr;
}

const Category* ScenarioCatalog::find_category(std::string_view cid) const {
    for (const auto& c : categories)
        if (c.id == cid) return &c;
    return nullptr;
}

std::string to_string(CategoryKind kind) {
    return kind == CategoryKind::product ? "product" : "societal";
}

std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::seed: return "seed";
    case Provenance::paraphrase: return "paraphrase";
    case Provenance::synonym_replaced: return "synonym_replaced";
    }
    return "seed";
}

CategoryKind category_kind_from_string(std::string_view s) {
    if (s == "product") return CategoryKind::product;
    if (s == "societal") return CategoryKind::societal;
    throw ParseError("unknown category kind: " + std::string(s));
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "seed") return Provenance::seed;
    if (s == "paraphrase") return Provenance::paraphrase;
    if (s == "synonym_replaced") return Provenance::synonym_replaced;
    throw ParseError("unknown provenance: " + std::string(s));
}

void validate_catalog(const ScenarioCatalog& catalog) {
    std::set<std::string> category_ids;
    for (const auto& cat : catalog.categories) {
        if (!category_ids.insert(cat.id).second)
            throw ValidationError("duplicate category id: " + cat.id);
        if (cat.concepts.empty())
            throw ValidationError("category " + cat.id + " has no concepts");
        if (cat.prompts.empty())
            throw ValidationError("category " + cat.id + " has no prompts");

        std::set<std::string> concept_ids;
        for (const auto& con : cat.concepts) {
            if (!concept_ids.insert(con.id).second)
                throw ValidationError("duplicate target_concept id in category " + cat.id +
                                      ": " + con.id);
            if (con.target_words.empty())
                throw ValidationError("target_concept " + con.id + " has empty target_words");
            std::set<std::string> folded;
            for (const auto& w : con.target_words) {
                if (!folded.insert(fold_copy(w)).second)
                    throw ValidationError("target_concept " + con.id +
                                          " has duplicate target word: " + w);
            }
        }

        std::set<std::string> prompt_ids;
        for (const auto& p : cat.prompts)
            prompt_ids.insert(p.id);
        for (const auto& p : cat.prompts) {
            if (p.text.empty())
                throw ValidationError("prompt " + p.id + " has empty text");
            if (p.provenance == Provenance::synonym_replaced && !p.parent_id)
                throw ValidationError("synonym_replaced prompt " + p.id +
                                      " has no parent_id");
            if (p.parent_id && !prompt_ids.count(*p.parent_id))
                throw ValidationError("prompt " + p.id + " has dangling parent_id: " +
                                      *p.parent_id);
        }
    }
}

Prompt prompt_from_json(const nlohmann::json& doc) {
    Prompt p;
    p.id = doc.at("id").get<std::string>();
    p.text = doc.at("text").get<std::string>();
    if (doc.contains("provenance"))
        p.provenance = provenance_from_string(doc.at("provenance").get<std::string>());
    if (doc.contains("parent_id") && !doc.at("parent_id").is_null())
        p.parent_id = doc.at("parent_id").get<std::string>();
    return p;
}

nlohmann::json prompt_to_json(const Prompt& p) {
    nlohmann::json out{{"id", p.id},
                       {"text", p.text},
                       {"provenance", to_string(p.provenance)}};
    if (p.parent_id) out["parent_id"] = *p.parent_id;
    return out;
}

ScenarioCatalog parse_catalog(const nlohmann::json& doc) {
    ScenarioCatalog catalog;
    try {
        catalog.version = doc.at("version").get<std::string>();
        for (const auto& cat_doc : doc.at("categories")) {
            Category cat;
            cat.id = cat_doc.at("id").get<std::string>();
            cat.kind = category_kind_from_string(cat_doc.at("kind").get<std::string>());
            for (const auto& con_doc : cat_doc.at("concepts")) {
                Concept con;
                con.id = con_doc.at("id").get<std::string>();
                con.display_name = con_doc.value("display_name", con.id);
                con.target_words =
                    con_doc.at("target_words").get<std::vector<std::string>>();
                cat.concepts.push_back(std::move(con));
            }
            for (const auto& p_doc : cat_doc.at("prompts"))
                cat.prompts.push_back(prompt_from_json(p_doc));
            catalog.categories.push_back(std::move(cat));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed catalog: ") + e.what());
    }
    validate_catalog(catalog);
    return catalog;
}

ScenarioCatalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open catalog file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("catalog " + path.string() + ": " + e.what());
    }
    return parse_catalog(doc);
}

nlohmann::json catalog_to_json(const ScenarioCatalog& catalog) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& cat : catalog.categories) {
        nlohmann::json cons = nlohmann::json::array();
        for (const auto& con : cat.concepts)
            cons.push_back({{"id", con.id},
                            {"display_name", con.display_name},
                            {"target_words", con.target_words}});
        nlohmann::json prompts = nlohmann::json::array();
        for (const auto& p : cat.prompts)
            prompts.push_back(prompt_to_json(p));
        cats.push_back({{"id", cat.id},
                        {"kind", to_string(cat.kind)},
                        {"concepts", cons},
                        {"prompts", prompts}});
    }
    return {{"version", catalog.version}, {"categories", cats}};
}

bool mention_in_text(std::string_view text, const Concept& target_concept) {
    return first_mention_position(text, target_concept).has_value();
}

std::optional<std::size_t> first_mention_position(std::string_view text,
                                                  const Concept& target_concept) {
    std::optional<std::size_t> best;
    for (const auto& word : target_concept.target_words) {
        auto pos = first_boundary_match(text, word);
        if (pos && (!best || *pos < *best)) best = pos;
    }
    return best;
}

} // namespace pbias
