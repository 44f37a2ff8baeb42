// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Each check is self-contained and uses only bundled data — no
// network access.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracle.hpp"
#include "pbias/econ.hpp"
#include "pbias/harness.hpp"
#include "pbias/http_backend.hpp"
#include "pbias/perturb.hpp"
#include "pbias/scoring.hpp"
#include "pbias/stats.hpp"
#include "pbias/toy_model.hpp"

using namespace pbias;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << index << ": " << name;
    if (!ok && !detail.empty()) std::cout << " — " << detail;
    std::cout << "\n";
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

// ---- criterion 1: loss equals the brute-force union probability -----------

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    std::string detail;
    bool ok = true;

    for (int trial = 0; trial < 120 && ok; ++trial) {
        const std::size_t vocab = 2 + rng() % 5; // 2..6
        const int order = 1 + static_cast<int>(rng() % 2);
        const int horizon = 1 + static_cast<int>(rng() % 3);
        const auto spec = test_oracle::random_toy_model(rng, vocab, order);
        ToyBackend backend(spec);

        std::vector<std::string> prompt_words;
        for (std::size_t i = 0, len = 1 + rng() % 3; i < len; ++i)
            prompt_words.push_back(spec.vocabulary[rng() % vocab]);

        std::vector<TokenSeq> raw;
        std::vector<std::vector<std::string>> oracle_targets;
        for (std::size_t t = 0, nt = 1 + rng() % 3; t < nt; ++t) {
            std::vector<std::string> words;
            for (std::size_t i = 0,
                             len = 1 + rng() % static_cast<std::size_t>(horizon);
                 i < len; ++i)
                words.push_back(spec.vocabulary[rng() % vocab]);
            raw.push_back(backend.tokenize(join_words(words)));
            oracle_targets.push_back(words);
        }

        TargetSet targets;
        targets.sequences = prefix_deduplicate(raw);
        LossConfig cfg;
        cfg.horizon = horizon;
        const auto loss = target_set_loss(backend.tokenize(join_words(prompt_words)),
                                          targets, cfg, backend);
        const double expected = test_oracle::prefix_event_probability(
            spec, prompt_words, oracle_targets, horizon);
        const double delta = std::abs(loss.union_probability - expected);
        worst = std::max(worst, delta);
        if (delta > 1e-9 ||
            std::abs(loss.value - (-std::log(expected))) > 1e-9 * (1.0 + loss.value)) {
            ok = false;
            detail = "trial " + std::to_string(trial) + " delta " +
                     std::to_string(delta);
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + " s (budget 10 s)";
    }
    report(1, "loss matches exhaustive enumeration on 120 random tables (<= 1e-9)",
           ok, detail);
}

// ---- criterion 2: selection is the true argmin/argmax ---------------------

void criterion_2() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(202);
    bool ok = true;
    std::string detail;

    // Dictionary over the oracle vocabulary w0..w5: two groups.
    SynonymDictionary dict;
    dict.groups.push_back({{"w0", "w1", "w2"}});
    dict.groups.push_back({{"w3", "w4"}});

    for (int trial = 0; trial < 40 && ok; ++trial) {
        const auto spec = test_oracle::random_toy_model(rng, 6, 1);
        ToyBackend backend(spec);

        // 2-4 replaceable positions; candidate count stays <= 3*2*3*2-1 = 35.
        std::vector<std::string> base_words = {"w0", "w3"};
        if (rng() % 2) base_words.push_back("w0");
        if (rng() % 2) base_words.push_back("w4");
        base_words.push_back("w5"); // fixed tail, never replaceable

        Prompt base;
        base.id = "base";
        base.text = join_words(base_words);
        const auto set = enumerate_candidates(base, dict, base_words.size());
        if (set.candidates.empty() || set.candidates.size() > 200) {
            ok = false;
            detail = "unexpected candidate count";
            break;
        }

        TargetSet targets;
        targets.sequences = {backend.tokenize("w5")};
        LossConfig cfg;
        cfg.horizon = 1;
        cfg.direction = (trial % 2 == 0) ? Direction::minimize : Direction::maximize;

        // Exhaustive re-score of every candidate with the enumeration oracle.
        std::size_t expected = 0;
        double best_p = -1.0;
        std::vector<double> oracle_p(set.candidates.size());
        for (std::size_t i = 0; i < set.candidates.size(); ++i) {
            std::istringstream in(set.candidates[i].prompt.text);
            std::vector<std::string> words;
            std::string w;
            while (in >> w) words.push_back(w);
            oracle_p[i] =
                test_oracle::prefix_event_probability(spec, words, {{"w5"}}, 1);
            const bool better = cfg.direction == Direction::minimize
                                    ? oracle_p[i] > best_p  // min loss = max p
                                    : best_p < 0.0 || oracle_p[i] < best_p;
            if (better) {
                best_p = oracle_p[i];
                expected = i;
            }
        }

        const auto result = select_candidate(set, targets, cfg, backend);
        if (result.chosen_index != expected) {
            ok = false;
            detail = "trial " + std::to_string(trial) + ": chose " +
                     std::to_string(result.chosen_index) + ", oracle says " +
                     std::to_string(expected);
        }
    }

    // Tie handling: a table whose rows are all identical makes every candidate
    // equal; the first in enumeration order must win.
    if (ok) {
        ToyModelSpec flat;
        flat.vocabulary = {"w0", "w1", "w2", "w3", "w4", "w5"};
        flat.order = 1;
        const std::vector<double> row = {0.1, 0.1, 0.1, 0.2, 0.2, 0.3};
        flat.table.emplace("", row);
        for (const auto& w : flat.vocabulary) flat.table.emplace(w, row);
        flat.table.emplace("<s>", row);
        ToyBackend backend(flat);

        Prompt base;
        base.id = "base";
        base.text = "w0 w3 w5";
        const auto set = enumerate_candidates(base, dict, 3);
        TargetSet targets;
        targets.sequences = {backend.tokenize("w5")};
        LossConfig cfg;
        cfg.horizon = 1;
        const auto result = select_candidate(set, targets, cfg, backend);
        if (result.chosen_index != 0) {
            ok = false;
            detail = "tie broke to index " + std::to_string(result.chosen_index);
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + " s (budget 10 s)";
    }
    report(2, "selection equals the exhaustively re-scored argmin/argmax with "
              "first-wins ties",
           ok, detail);
}

// ---- criterion 3: sampled mention rates are calibrated --------------------

// Exact P(the target word occurs among the first k sampled tokens): sums the
// chain probability of every length-k continuation containing the word.
double enumerated_mention_probability(const ToyModelSpec& spec,
                                      const std::vector<std::string>& prompt_words,
                                      const std::string& target, int k) {
    const std::size_t v = spec.vocabulary.size();
    std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
    double total = 0.0;
    for (;;) {
        double p = 1.0;
        bool hit = false;
        std::vector<std::string> context = prompt_words;
        for (int t = 0; t < k; ++t) {
            const auto dist = toy_next_distribution(spec, context, 1.0);
            const std::size_t idx = pick[static_cast<std::size_t>(t)];
            p *= dist[idx];
            hit |= spec.vocabulary[idx] == target;
            context.push_back(spec.vocabulary[idx]);
        }
        if (hit) total += p;
        int t = k - 1;
        while (t >= 0) {
            if (++pick[static_cast<std::size_t>(t)] < v) break;
            pick[static_cast<std::size_t>(t)] = 0;
            --t;
        }
        if (t < 0) break;
    }
    return total;
}

void criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(303);
    bool ok = true;
    std::string detail;
    const int n = 10000;

    for (int scenario = 0; scenario < 20 && ok; ++scenario) {
        const std::size_t vocab = 2 + rng() % 5; // 2..6
        const int order = 1 + static_cast<int>(rng() % 2);
        const auto spec = test_oracle::random_toy_model(rng, vocab, order);
        ToyBackend backend(spec);

        std::vector<std::string> prompt_words;
        for (std::size_t i = 0, len = 1 + rng() % 2; i < len; ++i)
            prompt_words.push_back(spec.vocabulary[rng() % vocab]);
        const std::string target = spec.vocabulary[rng() % vocab];

        Prompt prompt;
        prompt.id = "s" + std::to_string(scenario);
        prompt.text = join_words(prompt_words);
        Concept target_concept;
        target_concept.id = target;
        target_concept.target_words = {target};

        SamplingRequest req;
        req.n = n;
        req.max_tokens = 3;
        req.seed = 1000 + static_cast<std::uint64_t>(scenario);
        const auto profile = evaluate_prompt(prompt, target_concept, backend, req);

        for (int k = 1; k <= 3 && ok; ++k) {
            const double p =
                enumerated_mention_probability(spec, prompt_words, target, k);
            const double sigma = std::sqrt(p * (1.0 - p) / n);
            if (std::abs(profile.rate(k) - p) > 3.0 * sigma) {
                ok = false;
                detail = "scenario " + std::to_string(scenario) + " k=" +
                         std::to_string(k) + ": rate " +
                         std::to_string(profile.rate(k)) + " vs p " +
                         std::to_string(p);
            }
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 60.0) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + " s (budget 60 s)";
    }
    report(3, "mention rates at k=1..3 (n=10,000) lie within 3 sigma of the "
              "enumerated probability for 20 scenarios",
           ok, detail);
}

// ---- criterion 4: improvement arithmetic is bit-exact ---------------------

void criterion_4() {
    MentionProfile base;
    base.concept_id = "c";
    base.backend_name = "toy";
    base.n = 1000;
    base.max_tokens = 1;
    base.counts = {200}; // 20%
    MentionProfile perturbed = base;
    perturbed.counts = {500}; // 50%

    const auto record = compare_pair(base, perturbed);
    const bool ok = record.absolute(1) == 0.3 && record.relative(1).has_value() &&
                    *record.relative(1) == 1.5;
    report(4, "20% -> 50% gives absolute 0.3 and relative 1.5, bit-exact", ok,
           "absolute/relative not exact");
}

// ---- criterion 5: economics reproduce the published arithmetic ------------

void criterion_5() {
    auto sigfig6 = [](double got, double want) {
        return std::abs(got - want) <= 5e-7 * std::abs(want);
    };
    const PriceSheet budget{0.15, 0.20, 0.004};
    const PriceSheet premium{30.0, 75.0, 0.004};

    bool ok = true;
    std::string detail;
    auto check = [&](bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    };
    check(sigfig6(selection_cost(budget, 400), 0.0000602), "selection 0.0000602");
    check(sigfig6(selection_cost(premium, 400), 0.012075), "selection 0.012075");
    check(sigfig6(paraphrase_cost(budget, 400, 64, 1000, 4.21), 0.306488),
          "paraphrase 0.306488");
    check(sigfig6(paraphrase_cost(premium, 400, 64, 1000, 4.21), 70.728),
          "paraphrase 70.728");
    const auto cheap = breakeven_mentions(0.012075, 0.004);
    check(sigfig6(cheap.raw_ratio, 3.01875) && cheap.ceiling_mentions == 4,
          "break-even ratio 3.01875 / ceiling 4");
    const auto pricey = breakeven_mentions(70.728, 0.004);
    check(sigfig6(pricey.raw_ratio, 17682.0) && pricey.ceiling_mentions == 17682,
          "break-even 17,682");
    report(5, "economics values 0.0000602 / 0.012075 / 0.306488 / 70.728 / ratio "
              "3.01875 / 17,682 to 6 significant figures",
           ok, detail);
}

// ---- criterion 6: enumeration count matches brute force -------------------

void criterion_6() {
    bool ok = true;
    std::string detail;

    // All dictionaries with 1..4 replaceable positions and group sizes 2..5.
    for (int positions = 1; positions <= 4 && ok; ++positions) {
        std::vector<int> sizes(static_cast<std::size_t>(positions), 2);
        for (;;) {
            SynonymDictionary dict;
            std::vector<std::string> base_words;
            for (int p = 0; p < positions; ++p) {
                SynonymGroup group;
                for (int m = 0; m < sizes[static_cast<std::size_t>(p)]; ++m)
                    group.members.push_back("g" + std::to_string(p) + "m" +
                                            std::to_string(m));
                base_words.push_back(group.members.front());
                dict.groups.push_back(std::move(group));
            }
            Prompt base;
            base.id = "b";
            base.text = join_words(base_words);
            const auto found = find_replaceable(base, dict);

            for (std::size_t max_repl = 1;
                 max_repl <= static_cast<std::size_t>(positions) && ok; ++max_repl) {
                const auto projected =
                    projected_candidate_count(found, dict, max_repl);
                const auto set = enumerate_candidates(base, dict, max_repl);
                // Brute force: count digit vectors with 1..max_repl non-zero
                // digits over the group radices.
                std::uint64_t brute = 0;
                std::vector<int> digit(static_cast<std::size_t>(positions), 0);
                for (;;) {
                    int used = 0;
                    for (int p = 0; p < positions; ++p)
                        if (digit[static_cast<std::size_t>(p)] != 0) ++used;
                    if (used >= 1 && static_cast<std::size_t>(used) <= max_repl)
                        ++brute;
                    int p = positions - 1;
                    while (p >= 0) {
                        if (++digit[static_cast<std::size_t>(p)] <
                            sizes[static_cast<std::size_t>(p)])
                            break;
                        digit[static_cast<std::size_t>(p)] = 0;
                        --p;
                    }
                    if (p < 0) break;
                }
                if (projected != brute || set.candidates.size() != brute) {
                    ok = false;
                    detail = "sizes ";
                    for (int s : sizes) detail += std::to_string(s) + " ";
                    detail += "max " + std::to_string(max_repl) + ": projected " +
                              std::to_string(projected) + ", generated " +
                              std::to_string(set.candidates.size()) + ", brute " +
                              std::to_string(brute);
                }
            }

            // Next size combination (odometer over 2..5).
            int p = positions - 1;
            while (p >= 0) {
                if (++sizes[static_cast<std::size_t>(p)] <= 5) break;
                sizes[static_cast<std::size_t>(p)] = 2;
                --p;
            }
            if (p < 0 || !ok) break;
        }
    }
    report(6, "closed-form candidate count equals brute-force generation for all "
              "dictionaries with <= 4 positions and group sizes <= 5",
           ok, detail);
}

// ---- criterion 7: correlation thresholds and exact-arithmetic match -------

void criterion_7() {
    bool ok = classify_correlation(0.86) == CorrelationClass::strong &&
              classify_correlation(0.44) == CorrelationClass::moderate &&
              classify_correlation(0.05) == CorrelationClass::uncorrelated;
    std::string detail = ok ? "" : "threshold classification";

    const std::vector<std::vector<double>> xs = {
        {1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}, {0.5, -1.0, 2.0, 0.25}};
    const std::vector<std::vector<double>> ys = {
        {1.0, 3.0, 2.0, 5.0}, {2.0, 4.0, 6.0, 8.0}, {1.0, 3.0, 2.0, 5.0}};
    for (std::size_t i = 0; ok && i < xs.size(); ++i) {
        const double got = pearson(xs[i], ys[i]).rho;
        const double want = test_oracle::pearson_by_definition(xs[i], ys[i]);
        if (std::abs(got - want) > 1e-12) {
            ok = false;
            detail = "vector pair " + std::to_string(i);
        }
    }
    report(7, "0.86/0.44/0.05 classify as strong/moderate/uncorrelated; pearson "
              "matches the long-double oracle to 1e-12",
           ok, detail);
}

// ---- criterion 8: the pipeline is byte-deterministic -----------------------

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void criterion_8() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(std::random_device{}());
    const auto work = std::filesystem::temp_directory_path() /
                      ("pbias-acceptance-" + std::to_string(rng()));
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    bool ok = true;
    std::string detail;
    std::vector<std::filesystem::path> runs;
    for (int run = 0; run < 2 && ok; ++run) {
        const auto out_dir = work / ("run" + std::to_string(run));
        const json config = {
            {"catalog", std::string(PBIAS_DATA_DIR) + "/toy_catalog.json"},
            {"dictionary", std::string(PBIAS_DATA_DIR) + "/toy_synonyms.json"},
            {"backend",
             {{"kind", "toy"},
              {"model", std::string(PBIAS_DATA_DIR) + "/toy_model.json"},
              {"name", "toy"}}},
            {"attack",
             {{"category_id", "phones"},
              {"prompt_id", "phones-seed"},
              {"concept_id", "apple"},
              {"max_replacements", 7},
              {"direction", "minimize"}}},
            {"eval", {{"n", 1000}, {"max_tokens", 8}, {"seed", 42}}},
            {"output_dir", (out_dir).string()}};
        const auto config_path = work / ("config" + std::to_string(run) + ".json");
        std::ofstream(config_path) << config.dump(2) << "\n";

        const std::string cmd = std::string("\"") + PBIAS_CLI_PATH +
                                "\" --quiet pipeline run --config \"" +
                                config_path.string() + "\" > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            ok = false;
            detail = "pipeline run " + std::to_string(run) + " failed";
        }
        runs.push_back(out_dir);
    }

    if (ok) {
        const std::vector<std::string> files = {
            "runs/base/samples.jsonl", "runs/chosen/samples.jsonl",
            "runs/base/profile.json",  "runs/chosen/profile.json",
            "report.csv"};
        for (const auto& file : files) {
            const auto a = read_bytes(runs[0] / file);
            const auto b = read_bytes(runs[1] / file);
            if (a.empty() || a != b) {
                ok = false;
                detail = file + (a.empty() ? " missing/empty" : " differs");
                break;
            }
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 60.0) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + " s (budget 60 s)";
    }
    std::filesystem::remove_all(work);
    report(8, "two seed-42 pipeline runs produce byte-identical samples.jsonl, "
              "profile.json, and report.csv",
           ok, detail);
}

// ---- criterion 9: profile monotonicity and compare antisymmetry -----------

void criterion_9() {
    std::mt19937_64 rng(909);
    bool ok = true;
    std::string detail;

    for (int trial = 0; trial < 15 && ok; ++trial) {
        const std::size_t vocab = 3 + rng() % 4;
        const auto spec = test_oracle::random_toy_model(rng, vocab, 1);
        ToyBackend backend(spec);
        const std::string target = spec.vocabulary[rng() % vocab];

        Concept target_concept;
        target_concept.id = target;
        target_concept.target_words = {target};
        SamplingRequest req;
        req.n = 500;
        req.max_tokens = 4;
        req.seed = 7000 + static_cast<std::uint64_t>(trial);

        Prompt a;
        a.id = "a";
        a.text = spec.vocabulary[rng() % vocab];
        Prompt b;
        b.id = "b";
        b.text = spec.vocabulary[rng() % vocab];

        const auto pa = evaluate_prompt(a, target_concept, backend, req);
        const auto pb = evaluate_prompt(b, target_concept, backend, req);

        for (std::size_t i = 1; i < pa.counts.size() && ok; ++i) {
            if (pa.counts[i] < pa.counts[i - 1] || pb.counts[i] < pb.counts[i - 1]) {
                ok = false;
                detail = "non-monotone profile in trial " + std::to_string(trial);
            }
        }
        const auto forward = compare_pair(pa, pb);
        const auto backward = compare_pair(pb, pa);
        for (int k = 1; k <= req.max_tokens && ok; ++k) {
            if (forward.absolute(k) != -backward.absolute(k)) {
                ok = false;
                detail = "antisymmetry broke at k=" + std::to_string(k);
            }
        }
    }
    report(9, "profiles are monotone in k and comparisons are antisymmetric over "
              "randomized toy runs",
           ok, detail);
}

// ---- criterion 10: offline HTTP fixture replays ----------------------------

void criterion_10() {
    bool ok = true;
    std::string detail;
    auto load = [&](const std::string& name) {
        std::ifstream in(std::string(PBIAS_DATA_DIR) + "/fixtures/" + name);
        json doc;
        in >> doc;
        return doc;
    };

    try {
        const auto completion =
            parse_completion_logprobs(load("completion_logprobs.json"), 24, -50.0);
        if (completion.tokens != std::vector<std::string>{" Apple"} ||
            completion.logprobs[0].logprob != -0.35667494393873245 ||
            completion.logprobs[0].clamped) {
            ok = false;
            detail = "completion fixture";
        }

        const auto samples = parse_chat_samples(load("chat_sample.json"));
        if (samples.size() != 2 || samples[0].text != "The Pixel is a solid pick." ||
            samples[0].token_texts.size() != 7 ||
            samples[0].finish_reason != FinishReason::stop ||
            samples[1].token_texts.size() != 1 ||
            samples[1].finish_reason != FinishReason::length) {
            ok = false;
            detail = "chat fixture";
        }

        const auto embedding = parse_embedding(load("embedding.json"));
        if (embedding != std::vector<double>{0.6, 0.8, 0.0, 0.0}) {
            ok = false;
            detail = "embedding fixture";
        }
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    report(10, "recorded completion/chat/embedding fixtures parse to the stored "
               "values offline",
           ok, detail);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    if (g_failures == 0) {
        std::cout << "acceptance: all 10 criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << g_failures << " criteria FAILED\n";
    return 1;
}
