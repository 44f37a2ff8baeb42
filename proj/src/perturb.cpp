#include "pbias/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <set>

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

struct TokenSpan {
    std::size_t begin;
    std::size_t end;
};

std::vector<TokenSpan> whitespace_tokens(std::string_view text) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i >= text.size()) break;
        std::size_t begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        spans.push_back({begin, i});
    }
    return spans;
}

// Strips leading/trailing non-alphanumeric characters; returns the core range
// or nullopt when the token has no alphanumeric character at all.
std::optional<TokenSpan> core_of(std::string_view text, TokenSpan token) {
    std::size_t b = token.begin;
    std::size_t e = token.end;
    while (b < e && !std::isalnum(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b >= e) return std::nullopt;
    return TokenSpan{b, e};
}

std::string match_capitalization(std::string_view original, std::string substitute) {
    if (!original.empty() && !substitute.empty() &&
        std::isupper(static_cast<unsigned char>(original[0]))) {
        substitute[0] =
            static_cast<char>(std::toupper(static_cast<unsigned char>(substitute[0])));
    }
    return substitute;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b
               ? std::numeric_limits<std::uint64_t>::max()
               : a + b;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > std::numeric_limits<std::uint64_t>::max() / b)
        return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

} // namespace

std::optional<std::size_t> SynonymDictionary::group_of(std::string_view folded_word) const {
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (const auto& member : groups[g].members)
            if (fold_copy(member) == folded_word) return g;
    return std::nullopt;
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::product: return "product";
    case ScenarioKind::societal: return "societal";
    case ScenarioKind::any: return "any";
    }
    return "any";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
    if (s == "product") return ScenarioKind::product;
    if (s == "societal") return ScenarioKind::societal;
    if (s == "any") return ScenarioKind::any;
    throw ParseError("unknown scenario kind: " + std::string(s));
}

SynonymDictionary parse_dictionary(const nlohmann::json& doc) {
    SynonymDictionary dict;
    try {
        dict.scenario_kind =
            scenario_kind_from_string(doc.value("scenario_kind", "any"));
        for (const auto& group_doc : doc.at("groups")) {
            SynonymGroup group;
            group.members = group_doc.get<std::vector<std::string>>();
            dict.groups.push_back(std::move(group));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed dictionary: ") + e.what());
    }

    std::set<std::string> seen;
    for (const auto& group : dict.groups) {
        if (group.members.size() < 2)
            throw ValidationError("synonym group needs at least 2 members");
        for (const auto& member : group.members) {
            if (!seen.insert(fold_copy(member)).second)
                throw ValidationError("word appears in more than one synonym group: " +
                                      member);
        }
        // More than 7 alternatives per word is suspicious but not fatal.
        if (group.members.size() > 8)
            dict.warnings.push_back("group starting with '" + group.members.front() +
                                    "' gives a word more than 7 alternatives");
    }
    return dict;
}

SynonymDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dictionary file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("dictionary " + path.string() + ": " + e.what());
    }
    return parse_dictionary(doc);
}

std::vector<ReplaceablePosition> find_replaceable(const Prompt& base,
                                                  const SynonymDictionary& dict) {
    std::vector<ReplaceablePosition> positions;
    const auto tokens = whitespace_tokens(base.text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto core = core_of(base.text, tokens[i]);
        if (!core) continue;
        std::string word(base.text.substr(core->begin, core->end - core->begin));
        auto group = dict.group_of(fold_copy(word));
        if (!group) continue;
        positions.push_back({i, *group, core->begin, core->end, std::move(word)});
    }
    return positions;
}

std::uint64_t projected_candidate_count(const std::vector<ReplaceablePosition>& positions,
                                        const SynonymDictionary& dict,
                                        std::size_t max_replacements) {
    // ways[j] = number of combinations replacing exactly j positions.
    std::vector<std::uint64_t> ways(positions.size() + 1, 0);
    ways[0] = 1;
    for (const auto& pos : positions) {
        const std::uint64_t alts = dict.groups[pos.group_index].members.size() - 1;
        for (std::size_t j = ways.size() - 1; j > 0; --j)
            ways[j] = saturating_add(ways[j], saturating_mul(ways[j - 1], alts));
    }
    std::uint64_t total = 0;
    for (std::size_t j = 1; j <= std::min(max_replacements, positions.size()); ++j)
        total = saturating_add(total, ways[j]);
    return total;
}

namespace {

struct Enumerator {
    const Prompt& base;
    const SynonymDictionary& dict;
    const std::vector<ReplaceablePosition>& positions;
    std::vector<std::vector<std::string>> alternatives; // per position, dictionary order
    std::size_t max_replacements;
    std::vector<std::size_t> digits;
    CandidateSet* out;

    void emit() {
        std::string text = base.text;
        std::vector<Replacement> replacements;
        // Splice right-to-left so earlier byte offsets stay valid.
        for (std::size_t i = positions.size(); i-- > 0;) {
            if (digits[i] == 0) continue;
            const auto& pos = positions[i];
            std::string substitute =
                match_capitalization(pos.core, alternatives[i][digits[i] - 1]);
            text.replace(pos.core_begin, pos.core_end - pos.core_begin, substitute);
            replacements.push_back({pos.word_index, pos.core, std::move(substitute)});
        }
        std::reverse(replacements.begin(), replacements.end());

        Candidate candidate;
        candidate.prompt.id = base.id + "#" + std::to_string(out->candidates.size() + 1);
        candidate.prompt.text = std::move(text);
        candidate.prompt.provenance = Provenance::synonym_replaced;
        candidate.prompt.parent_id = base.id;
        candidate.replacements = std::move(replacements);
        out->candidates.push_back(std::move(candidate));
    }

    void recurse(std::size_t index, std::size_t used) {
        if (index == positions.size()) {
            if (used > 0) emit();
            return;
        }
        recurse(index + 1, used); // keep original
        if (used == max_replacements) return;
        for (std::size_t a = 1; a <= alternatives[index].size(); ++a) {
            digits[index] = a;
            recurse(index + 1, used + 1);
        }
        digits[index] = 0;
    }
};

} // namespace

CandidateSet enumerate_candidates(const Prompt& base, const SynonymDictionary& dict,
                                  std::size_t max_replacements, std::uint64_t cap) {
    if (max_replacements < 1)
        throw ValidationError("max_replacements must be >= 1");
    const auto positions = find_replaceable(base, dict);

    const std::uint64_t projected =
        projected_candidate_count(positions, dict, max_replacements);
    if (projected > cap)
        throw ValidationError("projected candidate count " + std::to_string(projected) +
                              " exceeds cap " + std::to_string(cap));

    CandidateSet set;
    set.base = base;
    if (positions.empty()) return set;

    Enumerator e{base, dict, positions, {}, max_replacements,
                 std::vector<std::size_t>(positions.size(), 0), &set};
    for (const auto& pos : positions) {
        std::vector<std::string> alts;
        const std::string folded_core = fold_copy(pos.core);
        for (const auto& member : dict.groups[pos.group_index].members)
            if (fold_copy(member) != folded_core) alts.push_back(member);
        e.alternatives.push_back(std::move(alts));
    }
    e.recurse(0, 0);
    return set;
}

std::size_t replacement_count(const Candidate& candidate) {
    return candidate.replacements.size();
}

std::string apply_replacements(const std::string& base_text,
                               const std::vector<Replacement>& replacements) {
    const auto tokens = whitespace_tokens(base_text);
    // Right-to-left splice; replacements arrive in ascending word_index order.
    std::string text = base_text;
    for (auto it = replacements.rbegin(); it != replacements.rend(); ++it) {
        if (it->word_index >= tokens.size())
            throw ValidationError("replacement word_index out of range");
        auto core = core_of(base_text, tokens[it->word_index]);
        if (!core)
            throw ValidationError("replacement targets a token with no core word");
        const std::string word(
            base_text.substr(core->begin, core->end - core->begin));
        if (word != it->original)
            throw ValidationError("replacement original '" + it->original +
                                  "' does not match token '" + word + "'");
        text.replace(core->begin, core->end - core->begin, it->substitute);
    }
    return text;
}

nlohmann::json candidate_to_json(const Candidate& candidate) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : candidate.replacements)
        reps.push_back({{"word_index", r.word_index},
                        {"original", r.original},
                        {"substitute", r.substitute}});
    return {{"id", candidate.prompt.id},
            {"text", candidate.prompt.text},
            {"replacements", reps}};
}

Candidate candidate_from_json(const nlohmann::json& doc) {
    Candidate c;
    try {
        c.prompt.id = doc.at("id").get<std::string>();
        c.prompt.text = doc.at("text").get<std::string>();
        c.prompt.provenance = Provenance::synonym_replaced;
        for (const auto& r : doc.at("replacements"))
            c.replacements.push_back({r.at("word_index").get<std::size_t>(),
                                      r.at("original").get<std::string>(),
                                      r.at("substitute").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed candidate: ") + e.what());
    }
    return c;
}

} // namespace pbias
