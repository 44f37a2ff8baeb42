#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "pbias/errors.hpp"
#include "pbias/perturb.hpp"

using namespace pbias;
using nlohmann::json;

namespace {

SynonymDictionary dict_from(std::vector<std::vector<std::string>> groups) {
    json doc = {{"scenario_kind", "any"}, {"groups", groups}};
    return parse_dictionary(doc);
}

Prompt make_prompt(std::string text) {
    return Prompt{"base", std::move(text), Provenance::seed, std::nullopt};
}

// Brute-force enumeration count: odometer over all keep/replace choices.
std::uint64_t brute_force_count(const std::vector<std::size_t>& group_sizes,
                                std::size_t max_replacements) {
    std::vector<std::size_t> digit(group_sizes.size(), 0);
    std::uint64_t count = 0;
    for (;;) {
        std::size_t used = 0;
        for (auto d : digit)
            if (d > 0) ++used;
        if (used >= 1 && used <= max_replacements) ++count;
        std::size_t i = digit.size();
        while (i > 0) {
            --i;
            if (++digit[i] < group_sizes[i]) break;
            digit[i] = 0;
            if (i == 0) return count;
        }
        if (digit.size() == 0) return count;
    }
}

} // namespace

TEST_CASE("dictionary rejects overlapping groups and tiny groups") {
    CHECK_THROWS_AS(dict_from({{"a", "b"}, {"B", "c"}}), ValidationError);
    CHECK_THROWS_AS(dict_from({{"alone"}}), ValidationError);
    const auto dict = dict_from({{"best", "great"}});
    CHECK(dict.group_of("best").has_value());
    CHECK(dict.group_of("BEST") == std::nullopt); // lookup takes folded input
}

TEST_CASE("oversized groups warn but load") {
    const auto dict = dict_from(
        {{"a", "b", "c", "d", "e", "f", "g", "h", "i"}}); // 8 alternatives
    CHECK(dict.warnings.size() == 1);
}

TEST_CASE("find_replaceable locates dictionary words") {
    const auto dict = dict_from({{"best", "great", "excellent", "suitable"}});
    const auto positions =
        find_replaceable(make_prompt("What is the best smartphone option?"), dict);
    REQUIRE(positions.size() == 1);
    CHECK(positions[0].word_index == 3);
    CHECK(positions[0].core == "best");

    CHECK(find_replaceable(make_prompt("nothing to do here"), dict).empty());

    // Case folding on lookup; punctuation stripped to find the core.
    const auto caps = find_replaceable(make_prompt("Best, obviously."), dict);
    REQUIRE(caps.size() == 1);
    CHECK(caps[0].core == "Best");
}

TEST_CASE("enumeration matches the combinatorial identity") {
    const auto dict = dict_from({{"best", "great", "excellent", "suitable"},
                                 {"option", "choice", "pick"}});
    const auto set = enumerate_candidates(
        make_prompt("What is the best smartphone option?"), dict, 7);
    CHECK(set.candidates.size() == 11); // 3*2 + 3 + 2 = (4*3)-1
}

TEST_CASE("no replaceable positions yields an empty set, not an error") {
    const auto dict = dict_from({{"best", "great"}});
    const auto set = enumerate_candidates(make_prompt("nothing matches"), dict, 7);
    CHECK(set.candidates.empty());
}

TEST_CASE("projected count over the cap is an error") {
    const auto dict = dict_from({{"a", "b", "c", "d", "e"},
                                 {"f", "g", "h", "i", "j"},
                                 {"k", "l", "m", "n", "o"}});
    CHECK_THROWS_AS(enumerate_candidates(make_prompt("a f k"), dict, 7, 10),
                    ValidationError);
}

TEST_CASE("capitalization and punctuation survive substitution") {
    const auto dict = dict_from({{"best", "great"}});
    const auto set = enumerate_candidates(make_prompt("Best, or not"), dict, 7);
    REQUIRE(set.candidates.size() == 1);
    CHECK(set.candidates[0].prompt.text == "Great, or not");
    CHECK(set.candidates[0].replacements[0].original == "Best");
    CHECK(set.candidates[0].replacements[0].substitute == "Great");
}

TEST_CASE("same word at two positions is replaced independently") {
    const auto dict = dict_from({{"best", "great"}});
    const auto set = enumerate_candidates(make_prompt("best of the best"), dict, 7);
    // digits over two positions: (0,1), (1,0), (1,1)
    REQUIRE(set.candidates.size() == 3);
    CHECK(set.candidates[0].prompt.text == "best of the great");
    CHECK(set.candidates[1].prompt.text == "great of the best");
    CHECK(set.candidates[2].prompt.text == "great of the great");
}

TEST_CASE("max_replacements bounds every candidate") {
    const auto dict = dict_from({{"a", "b"}, {"c", "d"}, {"e", "f"}});
    const auto set = enumerate_candidates(make_prompt("a c e"), dict, 2);
    CHECK(set.candidates.size() == 6); // 3 singles + 3 doubles
    for (const auto& c : set.candidates) {
        CHECK(replacement_count(c) >= 1);
        CHECK(replacement_count(c) <= 2);
    }
}

TEST_CASE("enumeration is deterministic and texts are distinct") {
    const auto dict = dict_from({{"best", "great", "top"}, {"phone", "handset"}});
    const auto a = enumerate_candidates(make_prompt("the best phone"), dict, 7);
    const auto b = enumerate_candidates(make_prompt("the best phone"), dict, 7);
    REQUIRE(a.candidates.size() == b.candidates.size());
    std::set<std::string> texts;
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].prompt.text == b.candidates[i].prompt.text);
        texts.insert(a.candidates[i].prompt.text);
    }
    CHECK(texts.size() == a.candidates.size());
}

TEST_CASE("every candidate round-trips through its replacement list") {
    const auto dict =
        dict_from({{"best", "great", "top"}, {"phone", "handset"}, {"new", "fresh"}});
    const Prompt base = make_prompt("Recommend the best, new phone today!");
    const auto set = enumerate_candidates(base, dict, 7);
    CHECK(set.candidates.size() > 0);
    for (const auto& c : set.candidates) {
        CHECK(apply_replacements(base.text, c.replacements) == c.prompt.text);
        CHECK(c.prompt.parent_id == base.id);
        CHECK(c.prompt.provenance == Provenance::synonym_replaced);
    }
}

TEST_CASE("closed-form count equals brute force for small position sets") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> letters = {"q", "r", "s", "t"};
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n_positions = 1 + rng() % 4;
        std::vector<std::vector<std::string>> groups;
        std::vector<std::size_t> sizes;
        std::string prompt_text;
        for (std::size_t i = 0; i < n_positions; ++i) {
            const std::size_t size = 2 + rng() % 4; // group sizes 2..5
            std::vector<std::string> group;
            for (std::size_t m = 0; m < size; ++m)
                group.push_back(letters[i] + std::to_string(trial) + "x" +
                                std::to_string(m));
            if (!prompt_text.empty()) prompt_text += ' ';
            prompt_text += group[0];
            sizes.push_back(size);
            groups.push_back(std::move(group));
        }
        const std::size_t max_repl = 1 + rng() % 5;
        const auto dict = dict_from(groups);
        const auto positions = find_replaceable(make_prompt(prompt_text), dict);
        REQUIRE(positions.size() == n_positions);

        const auto closed = projected_candidate_count(positions, dict, max_repl);
        CHECK(closed == brute_force_count(sizes, max_repl));
        const auto set = enumerate_candidates(make_prompt(prompt_text), dict, max_repl);
        CHECK(set.candidates.size() == closed);
    }
}

TEST_CASE("candidate JSONL round-trip") {
    const auto dict = dict_from({{"best", "great"}});
    const auto set = enumerate_candidates(make_prompt("the best one"), dict, 7);
    REQUIRE(set.candidates.size() == 1);
    const auto back = candidate_from_json(candidate_to_json(set.candidates[0]));
    CHECK(back.prompt.text == set.candidates[0].prompt.text);
    CHECK(back.replacements.size() == 1);
    CHECK(back.replacements[0].substitute == "great");
}
