#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pbias/catalog.hpp"
#include "pbias/econ.hpp"
#include "pbias/errors.hpp"
#include "pbias/harness.hpp"
#include "pbias/http_backend.hpp"
#include "pbias/perturb.hpp"
#include "pbias/pipeline.hpp"
#include "pbias/scoring.hpp"
#include "pbias/stats.hpp"
#include "pbias/toy_model.hpp"

namespace {

using nlohmann::json;
using namespace pbias;

bool g_quiet = false;

void log_line(const std::string& stage, const std::string& message) {
    if (g_quiet) return;
    std::cerr << "[" << stage << "] " << message << "\n";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return doc;
}

void write_text_file(const std::string& path, const std::string& content, bool force) {
    if (!path.empty() && path != "-") {
        if (std::filesystem::exists(path) && !force)
            throw ConfigError("output file " + path + " exists; pass --force to overwrite");
        std::ofstream out(path);
        out << content;
    } else {
        std::cout << content;
    }
}

std::unique_ptr<Backend> backend_from_file(const std::string& path) {
    return make_backend(read_json_file(path));
}

struct PromptRef {
    const Category* category;
    const Prompt* prompt;
    const Concept* target_concept;
};

PromptRef resolve(const ScenarioCatalog& catalog, const std::string& category_id,
                  const std::string& prompt_id, const std::string& concept_id) {
    const Category* category = catalog.find_category(category_id);
    if (!category) throw ConfigError("no such category: " + category_id);
    const Prompt* prompt =
        prompt_id.empty() ? nullptr : category->find_prompt(prompt_id);
    if (!prompt_id.empty() && !prompt)
        throw ConfigError("no such prompt: " + prompt_id);
    const Concept* target_concept =
        concept_id.empty() ? nullptr : category->find_concept(concept_id);
    if (!concept_id.empty() && !target_concept)
        throw ConfigError("no such concept: " + concept_id);
    return {category, prompt, target_concept};
}

MentionProfile profile_from_file(const std::string& path) {
    return profile_from_json(read_json_file(path));
}

ImprovementRecord improvement_from_file(const std::string& path) {
    return improvement_from_json(read_json_file(path));
}

std::vector<Candidate> candidates_from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open candidates file: " + path);
    std::vector<Candidate> candidates;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        candidates.push_back(candidate_from_json(json::parse(line)));
    }
    return candidates;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Prompt-biasing attack toolkit: synonym-replacement candidate "
                 "enumeration, loss-guided selection, and mention-rate evaluation"};
    app.require_subcommand(1);
    app.add_flag("--quiet", g_quiet, "suppress progress logging");

    // ---- catalog validate --------------------------------------------------
    auto* catalog_cmd = app.add_subcommand("catalog", "catalog file operations");
    catalog_cmd->require_subcommand(1);
    std::string catalog_path;
    auto* catalog_validate =
        catalog_cmd->add_subcommand("validate", "load and validate a catalog file");
    catalog_validate->add_option("path", catalog_path)->required();
    catalog_validate->callback([&] {
        const auto catalog = load_catalog(catalog_path);
        std::size_t prompts = 0, concepts = 0;
        for (const auto& c : catalog.categories) {
            prompts += c.prompts.size();
            concepts += c.concepts.size();
        }
        std::cout << "valid: " << catalog.categories.size() << " categories, "
                  << concepts << " concepts, " << prompts << " prompts\n";
    });

    // ---- perturb enumerate / select ----------------------------------------
    auto* perturb_cmd = app.add_subcommand("perturb", "candidate enumeration and selection");
    perturb_cmd->require_subcommand(1);

    struct {
        std::string catalog, category, prompt, dictionary, output;
        std::size_t max_replacements = 7;
        std::uint64_t cap = kDefaultCandidateCap;
        bool force = false;
    } enum_opts;
    auto* enum_cmd = perturb_cmd->add_subcommand(
        "enumerate", "emit all synonym-replaced candidates as JSONL");
    enum_cmd->add_option("--catalog", enum_opts.catalog)->required();
    enum_cmd->add_option("--category", enum_opts.category)->required();
    enum_cmd->add_option("--prompt", enum_opts.prompt)->required();
    enum_cmd->add_option("--dictionary", enum_opts.dictionary)->required();
    enum_cmd->add_option("--max-replacements", enum_opts.max_replacements);
    enum_cmd->add_option("--cap", enum_opts.cap);
    enum_cmd->add_option("--output", enum_opts.output, "JSONL path (default stdout)");
    enum_cmd->add_flag("--force", enum_opts.force);
    enum_cmd->callback([&] {
        const auto catalog = load_catalog(enum_opts.catalog);
        const auto ref = resolve(catalog, enum_opts.category, enum_opts.prompt, "");
        const auto dict = load_dictionary(enum_opts.dictionary);
        for (const auto& w : dict.warnings) log_line("dictionary", "warning: " + w);
        const auto set = enumerate_candidates(*ref.prompt, dict,
                                              enum_opts.max_replacements, enum_opts.cap);
        std::string out;
        for (const auto& c : set.candidates) out += candidate_to_json(c).dump() + "\n";
        write_text_file(enum_opts.output, out, enum_opts.force);
        log_line("enumerate", std::to_string(set.candidates.size()) +
                                  " candidates (" +
                                  std::to_string(set.candidates.size() + 1) +
                                  " including the base prompt)");
    });

    struct {
        std::string candidates, catalog, category, target_concept, backend, output;
        std::string direction = "minimize";
        bool force = false;
    } select_opts;
    auto* select_cmd = perturb_cmd->add_subcommand(
        "select", "score candidates with the target-set loss and pick the best");
    select_cmd->add_option("--candidates", select_opts.candidates, "JSONL from enumerate")
        ->required();
    select_cmd->add_option("--catalog", select_opts.catalog)->required();
    select_cmd->add_option("--category", select_opts.category)->required();
    select_cmd->add_option("--concept", select_opts.target_concept)->required();
    select_cmd->add_option("--backend", select_opts.backend, "backend config JSON")
        ->required();
    select_cmd->add_option("--direction", select_opts.direction)
        ->check(CLI::IsMember({"minimize", "maximize"}));
    select_cmd->add_option("--output", select_opts.output);
    select_cmd->add_flag("--force", select_opts.force);
    select_cmd->callback([&] {
        const auto catalog = load_catalog(select_opts.catalog);
        const auto ref = resolve(catalog, select_opts.category, "", select_opts.target_concept);
        auto backend = backend_from_file(select_opts.backend);

        CandidateSet set;
        set.candidates = candidates_from_jsonl(select_opts.candidates);
        const auto targets = build_target_set(*ref.target_concept, *backend);
        LossConfig cfg;
        cfg.horizon = static_cast<int>(targets.max_sequence_length());
        cfg.direction = direction_from_string(select_opts.direction);
        const auto result = select_candidate(set, targets, cfg, *backend);

        json losses = json::array();
        for (std::size_t i = 0; i < result.losses.size(); ++i)
            losses.push_back({{"candidate_id", set.candidates[i].prompt.id},
                              {"value", result.losses[i].value},
                              {"union_probability", result.losses[i].union_probability},
                              {"clamped", result.losses[i].clamped}});
        write_text_file(select_opts.output,
                        json{{"chosen_id", result.chosen.id}, {"losses", losses}}.dump(2) +
                            "\n",
                        select_opts.force);
    });

    // ---- eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "sampling runs and improvement metrics");
    eval_cmd->require_subcommand(1);

    struct {
        std::string catalog, category, prompt, target_concept, backend, output;
        int n = 1000, max_tokens = 64;
        std::optional<double> temperature;
        std::optional<std::uint64_t> seed;
        bool force = false;
    } run_opts;
    auto* run_cmd = eval_cmd->add_subcommand("run", "sample responses and build a mention profile");
    run_cmd->add_option("--catalog", run_opts.catalog)->required();
    run_cmd->add_option("--category", run_opts.category)->required();
    run_cmd->add_option("--prompt", run_opts.prompt)->required();
    run_cmd->add_option("--concept", run_opts.target_concept)->required();
    run_cmd->add_option("--backend", run_opts.backend)->required();
    run_cmd->add_option("--n", run_opts.n);
    run_cmd->add_option("--max-tokens", run_opts.max_tokens);
    run_cmd->add_option("--temperature", run_opts.temperature);
    run_cmd->add_option("--seed", run_opts.seed);
    run_cmd->add_option("--output", run_opts.output, "run directory")->required();
    run_cmd->add_flag("--force", run_opts.force);
    run_cmd->callback([&] {
        if (std::filesystem::exists(run_opts.output) &&
            !std::filesystem::is_empty(run_opts.output) && !run_opts.force)
            throw ConfigError("output directory " + run_opts.output +
                              " exists; pass --force to resume/overwrite");
        const auto catalog = load_catalog(run_opts.catalog);
        const auto ref =
            resolve(catalog, run_opts.category, run_opts.prompt, run_opts.target_concept);
        auto backend = backend_from_file(run_opts.backend);
        SamplingRequest request;
        request.n = run_opts.n;
        request.max_tokens = run_opts.max_tokens;
        request.temperature = run_opts.temperature;
        request.seed = run_opts.seed;
        RunStore store(run_opts.output);
        store.write_config({{"prompt_id", ref.prompt->id},
                            {"prompt_text", ref.prompt->text},
                            {"concept_id", ref.target_concept->id},
                            {"backend", backend->descriptor().name},
                            {"n", run_opts.n},
                            {"max_tokens", run_opts.max_tokens}});
        const auto t0 = std::chrono::steady_clock::now();
        const auto profile =
            evaluate_prompt(*ref.prompt, *ref.target_concept, *backend, request, &store);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        log_line("eval", "run " + run_opts.output + " finished in " +
                             std::to_string(ms) + " ms; rate(K) = " +
                             format_double(profile.rate(profile.max_tokens)));
    });

    struct {
        std::string base, perturbed, output;
        bool force = false;
    } compare_opts;
    auto* compare_cmd =
        eval_cmd->add_subcommand("compare", "absolute/relative improvement of two runs");
    compare_cmd->add_option("--base", compare_opts.base, "base profile.json or run dir")
        ->required();
    compare_cmd->add_option("--perturbed", compare_opts.perturbed)->required();
    compare_cmd->add_option("--output", compare_opts.output);
    compare_cmd->add_flag("--force", compare_opts.force);
    compare_cmd->callback([&] {
        auto load = [](const std::string& path) {
            if (std::filesystem::is_directory(path))
                return RunStore(path).load_profile();
            return profile_from_file(path);
        };
        const auto record = compare_pair(load(compare_opts.base),
                                         load(compare_opts.perturbed));
        write_text_file(compare_opts.output, improvement_to_json(record).dump(2) + "\n",
                        compare_opts.force);
    });

    struct {
        std::vector<std::string> profiles;
        std::string output;
        bool force = false;
    } spread_opts;
    auto* spread_cmd = eval_cmd->add_subcommand(
        "spread", "max pairwise rate difference across paraphrase profiles");
    spread_cmd->add_option("--profiles", spread_opts.profiles)->required()->expected(-2);
    spread_cmd->add_option("--output", spread_opts.output);
    spread_cmd->add_flag("--force", spread_opts.force);
    spread_cmd->callback([&] {
        std::vector<MentionProfile> profiles;
        for (const auto& p : spread_opts.profiles) profiles.push_back(profile_from_file(p));
        const auto result = paraphrase_spread(profiles);
        json rows = json::array();
        for (std::size_t k = 0; k < result.spread.size(); ++k)
            rows.push_back({{"k", k + 1},
                            {"spread", result.spread[k]},
                            {"pair", {result.argmax_pair[k].first,
                                      result.argmax_pair[k].second}}});
        write_text_file(spread_opts.output, rows.dump(2) + "\n", spread_opts.force);
    });

    struct {
        std::vector<std::string> improvements;
        double window_min = 0.001, window_max = 0.5;
        std::string output;
        bool force = false;
    } agg_opts;
    auto* agg_cmd = eval_cmd->add_subcommand(
        "aggregate", "per-k average (base-rate windowed) and max improvement");
    agg_cmd->add_option("--improvements", agg_opts.improvements)->required()->expected(-1);
    agg_cmd->add_option("--window-min", agg_opts.window_min);
    agg_cmd->add_option("--window-max", agg_opts.window_max);
    agg_cmd->add_option("--output", agg_opts.output);
    agg_cmd->add_flag("--force", agg_opts.force);
    agg_cmd->callback([&] {
        std::vector<ImprovementRecord> records;
        for (const auto& p : agg_opts.improvements)
            records.push_back(improvement_from_file(p));
        const auto result =
            aggregate_improvements(records, agg_opts.window_min, agg_opts.window_max);
        if (result.averaged_records == 0)
            log_line("aggregate", "warning: no records inside the base-rate window");
        json out = {{"averaged_records", result.averaged_records},
                    {"average", result.average},
                    {"maximum", result.maximum}};
        write_text_file(agg_opts.output, out.dump(2) + "\n", agg_opts.force);
    });

    struct {
        std::string catalog, category, target_concept, backend, output;
        std::vector<std::string> prompts;
        std::vector<double> temps;
        int n = 1000, max_tokens = 64;
        std::optional<std::uint64_t> seed;
        bool force = false;
    } sweep_opts;
    auto* sweep_cmd =
        eval_cmd->add_subcommand("sweep-temp", "evaluate prompts across temperatures");
    sweep_cmd->add_option("--catalog", sweep_opts.catalog)->required();
    sweep_cmd->add_option("--category", sweep_opts.category)->required();
    sweep_cmd->add_option("--prompts", sweep_opts.prompts)->required()->expected(-1);
    sweep_cmd->add_option("--concept", sweep_opts.target_concept)->required();
    sweep_cmd->add_option("--backend", sweep_opts.backend)->required();
    sweep_cmd->add_option("--temps", sweep_opts.temps)->required()->expected(-1);
    sweep_cmd->add_option("--n", sweep_opts.n);
    sweep_cmd->add_option("--max-tokens", sweep_opts.max_tokens);
    sweep_cmd->add_option("--seed", sweep_opts.seed);
    sweep_cmd->add_option("--output", sweep_opts.output);
    sweep_cmd->add_flag("--force", sweep_opts.force);
    sweep_cmd->callback([&] {
        const auto catalog = load_catalog(sweep_opts.catalog);
        const auto ref = resolve(catalog, sweep_opts.category, "", sweep_opts.target_concept);
        std::vector<Prompt> prompts;
        for (const auto& pid : sweep_opts.prompts) {
            const Prompt* p = ref.category->find_prompt(pid);
            if (!p) throw ConfigError("no such prompt: " + pid);
            prompts.push_back(*p);
        }
        auto backend = backend_from_file(sweep_opts.backend);
        SamplingRequest request;
        request.n = sweep_opts.n;
        request.max_tokens = sweep_opts.max_tokens;
        request.seed = sweep_opts.seed;
        const auto cells = temperature_sweep(prompts, *ref.target_concept, *backend,
                                             sweep_opts.temps, request);
        json rows = json::array();
        for (const auto& cell : cells) {
            json row = {{"temperature", cell.temperature},
                        {"prompt_id", cell.prompt_id}};
            if (cell.profile)
                row["profile"] = profile_to_json(*cell.profile);
            else
                row["error"] = cell.error;
            rows.push_back(std::move(row));
        }
        write_text_file(sweep_opts.output, rows.dump(2) + "\n", sweep_opts.force);
    });

    struct {
        std::vector<std::string> improvements;
        std::string output;
        bool force = false;
    } bycount_opts;
    auto* bycount_cmd = eval_cmd->add_subcommand(
        "by-count", "max improvement at k=K grouped by replacement count");
    bycount_cmd->add_option("--improvements", bycount_opts.improvements)
        ->required()
        ->expected(-1);
    bycount_cmd->add_option("--output", bycount_opts.output);
    bycount_cmd->add_flag("--force", bycount_opts.force);
    bycount_cmd->callback([&] {
        std::vector<ImprovementRecord> records;
        for (const auto& p : bycount_opts.improvements)
            records.push_back(improvement_from_file(p));
        json out = json::object();
        for (const auto& [count, best] : synonym_count_breakdown(records))
            out[std::to_string(count)] = best;
        write_text_file(bycount_opts.output, out.dump(2) + "\n", bycount_opts.force);
    });

    struct {
        std::string catalog, category, prompt, target_concept, backend;
        int n = 1000, max_tokens = 64;
        std::optional<std::uint64_t> seed;
    } stab_opts;
    auto* stab_cmd = eval_cmd->add_subcommand(
        "stability", "diagnostic: count gap between two half-size batches");
    stab_cmd->add_option("--catalog", stab_opts.catalog)->required();
    stab_cmd->add_option("--category", stab_opts.category)->required();
    stab_cmd->add_option("--prompt", stab_opts.prompt)->required();
    stab_cmd->add_option("--concept", stab_opts.target_concept)->required();
    stab_cmd->add_option("--backend", stab_opts.backend)->required();
    stab_cmd->add_option("--n", stab_opts.n);
    stab_cmd->add_option("--max-tokens", stab_opts.max_tokens);
    stab_cmd->add_option("--seed", stab_opts.seed);
    stab_cmd->callback([&] {
        const auto catalog = load_catalog(stab_opts.catalog);
        const auto ref =
            resolve(catalog, stab_opts.category, stab_opts.prompt, stab_opts.target_concept);
        auto backend = backend_from_file(stab_opts.backend);
        SamplingRequest request;
        request.n = stab_opts.n;
        request.max_tokens = stab_opts.max_tokens;
        request.seed = stab_opts.seed;
        const auto result =
            stability_check(*ref.prompt, *ref.target_concept, *backend, request);
        const int K = stab_opts.max_tokens;
        std::cout << json{{"half_n", result.first_half.n},
                          {"rate_first", result.first_half.rate(K)},
                          {"rate_second", result.second_half.rate(K)},
                          {"count_gap", result.count_gap}}
                         .dump(2)
                  << "\n";
    });

    // ---- stats ---------------------------------------------------------------
    auto* stats_cmd = app.add_subcommand("stats", "transfer and similarity statistics");
    stats_cmd->require_subcommand(1);

    struct {
        std::string inputs, output;
        int top = 0;
        bool force = false;
    } transfer_opts;
    auto* transfer_cmd = stats_cmd->add_subcommand(
        "transfer", "cross-model Pearson/sign-agreement matrix");
    transfer_cmd->add_option("--inputs", transfer_opts.inputs,
                             "JSON array of {pair_id, model, relative_improvement}")
        ->required();
    transfer_cmd->add_option("--top", transfer_opts.top,
                             "keep only the N largest shared pairs (0 = all)");
    transfer_cmd->add_option("--output", transfer_opts.output, "CSV path");
    transfer_cmd->add_flag("--force", transfer_opts.force);
    transfer_cmd->callback([&] {
        std::vector<TransferInput> inputs;
        for (const auto& row : read_json_file(transfer_opts.inputs)) {
            TransferInput in;
            in.pair_id = row.at("pair_id").get<std::string>();
            in.model = row.at("model").get<std::string>();
            if (row.contains("relative_improvement") &&
                !row.at("relative_improvement").is_null())
                in.relative_improvement = row.at("relative_improvement").get<double>();
            inputs.push_back(std::move(in));
        }
        const auto cells = transfer_report(inputs, transfer_opts.top);
        std::string csv = "model_a,model_b,shared_pairs,excluded_pairs,rho,p_value,"
                          "classification,sign_agreement\n";
        for (const auto& cell : cells) {
            csv += cell.model_a + "," + cell.model_b + "," +
                   std::to_string(cell.shared_pairs) + "," +
                   std::to_string(cell.excluded_pairs) + ",";
            if (cell.available) {
                csv += format_double(cell.correlation.rho) + "," +
                       format_double(cell.correlation.p_value) + "," +
                       to_string(cell.classification) + ",";
                csv += cell.agreement.defined ? format_double(cell.agreement.fraction)
                                              : "n/a";
            } else {
                csv += "n/a,n/a,n/a,n/a";
            }
            csv += "\n";
        }
        write_text_file(transfer_opts.output, csv, transfer_opts.force);
    });

    struct {
        std::string pairs, backend, output;
        bool force = false;
    } sim_opts;
    auto* sim_cmd = stats_cmd->add_subcommand(
        "similarity", "embedding cosine scores per prompt pair, grouped by kind");
    sim_cmd->add_option("--pairs", sim_opts.pairs,
                        "JSON array of {id_a, id_b, kind, text_a, text_b}")
        ->required();
    sim_cmd->add_option("--backend", sim_opts.backend,
                        "backend config JSON (default: deterministic hash embedder)");
    sim_cmd->add_option("--output", sim_opts.output);
    sim_cmd->add_flag("--force", sim_opts.force);
    sim_cmd->callback([&] {
        std::vector<SimilarityPair> pairs;
        for (const auto& row : read_json_file(sim_opts.pairs))
            pairs.push_back({row.at("id_a").get<std::string>(),
                             row.at("id_b").get<std::string>(),
                             row.at("kind").get<std::string>(),
                             row.at("text_a").get<std::string>(),
                             row.at("text_b").get<std::string>()});
        std::unique_ptr<Backend> backend;
        if (sim_opts.backend.empty())
            backend = std::make_unique<HashEmbedder>();
        else
            backend = backend_from_file(sim_opts.backend);
        const auto report = similarity_report(pairs, *backend);
        json rows = json::array();
        for (const auto& entry : report.pairs) {
            json row = {{"id_a", entry.id_a}, {"id_b", entry.id_b},
                        {"kind", entry.kind}};
            if (entry.score)
                row["score"] = *entry.score;
            else
                row["error"] = entry.error;
            rows.push_back(std::move(row));
        }
        json by_kind = json::object();
        for (const auto& [kind, summary] : report.by_kind)
            by_kind[kind] = summary_to_json(summary);
        write_text_file(sim_opts.output,
                        json{{"pairs", rows}, {"by_kind", by_kind}}.dump(2) + "\n",
                        sim_opts.force);
    });

    // ---- econ ------------------------------------------------------------------
    auto* econ_cmd = app.add_subcommand("econ", "attack-cost and break-even analysis");
    econ_cmd->require_subcommand(1);
    struct {
        std::string prices, mode = "selection", output;
        int prompt_tokens = 400, gen_tokens = 64, samples = 1000;
        double avg_prompts = 4.21;
        bool force = false;
    } econ_opts;
    auto* breakeven_cmd = econ_cmd->add_subcommand(
        "breakeven", "attack cost and mentions needed to recoup it");
    breakeven_cmd->add_option("--prices", econ_opts.prices, "price sheet JSON")->required();
    breakeven_cmd->add_option("--mode", econ_opts.mode)
        ->check(CLI::IsMember({"selection", "paraphrase"}));
    breakeven_cmd->add_option("--prompt-tokens", econ_opts.prompt_tokens);
    breakeven_cmd->add_option("--gen-tokens", econ_opts.gen_tokens);
    breakeven_cmd->add_option("--samples", econ_opts.samples);
    breakeven_cmd->add_option("--avg-prompts", econ_opts.avg_prompts);
    breakeven_cmd->add_option("--output", econ_opts.output);
    breakeven_cmd->add_flag("--force", econ_opts.force);
    breakeven_cmd->callback([&] {
        const auto prices = load_prices(econ_opts.prices);
        if (econ_opts.mode == "selection" && econ_opts.prompt_tokens > 400)
            log_line("econ", "warning: prompt longer than 400 tokens");
        const double cost =
            econ_opts.mode == "selection"
                ? selection_cost(prices, econ_opts.prompt_tokens)
                : paraphrase_cost(prices, econ_opts.prompt_tokens, econ_opts.gen_tokens,
                                  econ_opts.samples, econ_opts.avg_prompts);
        json out = {{"mode", econ_opts.mode}, {"attack_cost", cost}};
        if (prices.ad_price_per_impression > 0.0) {
            const auto b = breakeven_mentions(cost, prices.ad_price_per_impression);
            out["breakeven"] = {{"raw_ratio", b.raw_ratio},
                                {"ceiling_mentions", b.ceiling_mentions}};
        }
        write_text_file(econ_opts.output, out.dump(2) + "\n", econ_opts.force);
    });

    // ---- paraphrase generate -----------------------------------------------------
    auto* para_cmd = app.add_subcommand("paraphrase", "paraphrase collection");
    para_cmd->require_subcommand(1);
    struct {
        std::string backend, category_name, output;
        int count = 5;
        bool force = false;
    } para_opts;
    auto* para_gen =
        para_cmd->add_subcommand("generate", "ask a chat backend for paraphrases");
    para_gen->add_option("--backend", para_opts.backend)->required();
    para_gen->add_option("--category-name", para_opts.category_name)->required();
    para_gen->add_option("--count", para_opts.count);
    para_gen->add_option("--output", para_opts.output);
    para_gen->add_flag("--force", para_opts.force);
    para_gen->callback([&] {
        auto backend = backend_from_file(para_opts.backend);
        const auto result =
            paraphrase_generate(para_opts.category_name, *backend, para_opts.count);
        if (result.prompts.empty())
            log_line("paraphrase", "warning: no paraphrases parsed from the reply");
        json prompts = json::array();
        for (const auto& p : result.prompts) prompts.push_back(prompt_to_json(p));
        write_text_file(para_opts.output,
                        json{{"prompts", prompts}, {"raw_reply", result.raw_reply}}
                                .dump(2) +
                            "\n",
                        para_opts.force);
    });

    // ---- pipeline run ---------------------------------------------------------------
    auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end attack pipeline");
    pipeline_cmd->require_subcommand(1);
    struct {
        std::string config;
        bool force = false;
    } pipe_opts;
    auto* pipe_run = pipeline_cmd->add_subcommand(
        "run", "enumerate, select, evaluate base and chosen, compare");
    pipe_run->add_option("--config", pipe_opts.config, "run config JSON")->required();
    pipe_run->add_flag("--force", pipe_opts.force);
    pipe_run->callback([&] {
        const auto parsed = load_run_config(pipe_opts.config);
        const auto dir = run_pipeline(parsed.config, pipe_opts.force);
        log_line("pipeline", "experiment written to " + dir.string());
    });

    // ---- report export ----------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "experiment exports");
    report_cmd->require_subcommand(1);
    struct {
        std::string experiment, format = "csv", output;
        bool force = false;
    } report_opts;
    auto* report_export =
        report_cmd->add_subcommand("export", "re-export an experiment's report");
    report_export->add_option("--experiment", report_opts.experiment)->required();
    report_export->add_option("--format", report_opts.format)
        ->check(CLI::IsMember({"csv", "json"}));
    report_export->add_option("--output", report_opts.output)->required();
    report_export->add_flag("--force", report_opts.force);
    report_export->callback([&] {
        export_report(report_opts.experiment, report_opts.format, report_opts.output,
                      report_opts.force);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << "\n";
        return 3;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
