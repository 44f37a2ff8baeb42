#include "pbias/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pbias/catalog.hpp"
#include "pbias/errors.hpp"
#include "pbias/harness.hpp"
#include "pbias/http_backend.hpp"
#include "pbias/perturb.hpp"
#include "pbias/toy_model.hpp"

namespace pbias {

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + name + ": " + e.what());
    } catch (const BackendError& e) {
        throw BackendError("stage " + name + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("stage " + name + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError("stage " + name + ": " + e.what());
    }
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_report_csv(const std::filesystem::path& path,
                      const ImprovementRecord& record) {
    std::ofstream out(path);
    out << "k,base_rate,perturbed_rate,absolute,relative\n";
    for (int k = 1; k <= record.base.max_tokens; ++k) {
        out << k << ',' << format_double(record.base.rate(k)) << ','
            << format_double(record.perturbed.rate(k)) << ','
            << format_double(record.absolute(k)) << ',';
        if (auto rel = record.relative(k)) out << format_double(*rel);
        out << '\n';
    }
}

nlohmann::json report_rows_json(const ImprovementRecord& record) {
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 1; k <= record.base.max_tokens; ++k) {
        nlohmann::json row = {{"k", k},
                              {"base_rate", format_double(record.base.rate(k))},
                              {"perturbed_rate", format_double(record.perturbed.rate(k))},
                              {"absolute", format_double(record.absolute(k))}};
        if (auto rel = record.relative(k))
            row["relative"] = format_double(*rel);
        else
            row["relative"] = nullptr;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::unique_ptr<Backend> make_backend(const nlohmann::json& backend_doc) {
    const std::string kind = backend_doc.value("kind", "toy");
    if (kind == "toy") {
        const std::string model_path = backend_doc.at("model").get<std::string>();
        return std::make_unique<ToyBackend>(load_toy_model(model_path),
                                            backend_doc.value("name", "toy"));
    }
    if (kind == "http")
        return std::make_unique<HttpBackend>(parse_endpoint_config(backend_doc));
    if (kind == "hash-embedder")
        return std::make_unique<HashEmbedder>();
    throw ConfigError("unknown backend kind: " + kind);
}

ParsedRunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config: " + path.string());
    auto doc = std::make_shared<nlohmann::json>();
    try {
        in >> *doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("run config " + path.string() + ": " + e.what());
    }

    ParsedRunConfig parsed;
    parsed.document = doc;
    RunConfig& cfg = parsed.config;
    try {
        cfg.catalog_path = doc->at("catalog").get<std::string>();
        cfg.dictionary_path = doc->at("dictionary").get<std::string>();
        cfg.backend_doc = &doc->at("backend");

        const auto& attack = doc->at("attack");
        cfg.category_id = attack.at("category_id").get<std::string>();
        cfg.prompt_id = attack.at("prompt_id").get<std::string>();
        cfg.concept_id = attack.at("concept_id").get<std::string>();
        cfg.max_replacements = attack.value("max_replacements", cfg.max_replacements);
        cfg.candidate_cap = attack.value("candidate_cap", cfg.candidate_cap);
        cfg.direction =
            direction_from_string(attack.value("direction", "minimize"));
        if (attack.contains("variants")) {
            const auto& v = attack.at("variants");
            cfg.variants.verbatim = v.value("verbatim", true);
            cfg.variants.leading_space = v.value("leading_space", true);
            cfg.variants.lowercase = v.value("lowercase", false);
        }

        const auto& eval = doc->at("eval");
        cfg.n = eval.value("n", cfg.n);
        cfg.max_tokens = eval.value("max_tokens", cfg.max_tokens);
        if (eval.contains("temperature") && !eval.at("temperature").is_null())
            cfg.temperature = eval.at("temperature").get<double>();
        if (eval.contains("seed") && !eval.at("seed").is_null())
            cfg.seed = eval.at("seed").get<std::uint64_t>();

        cfg.output_dir = doc->at("output_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("run config " + path.string() + ": " + e.what());
    }

    if (!std::filesystem::exists(cfg.catalog_path))
        throw ConfigError("catalog file not found: " + cfg.catalog_path.string());
    if (!std::filesystem::exists(cfg.dictionary_path))
        throw ConfigError("dictionary file not found: " + cfg.dictionary_path.string());
    return parsed;
}

std::filesystem::path run_pipeline(const RunConfig& config, bool force) {
    if (std::filesystem::exists(config.output_dir) &&
        !std::filesystem::is_empty(config.output_dir) && !force)
        throw ConfigError("output directory " + config.output_dir.string() +
                          " exists; pass --force to overwrite");

    const auto catalog = stage("load-catalog",
                               [&] { return load_catalog(config.catalog_path); });
    const auto dict = stage("load-dictionary",
                            [&] { return load_dictionary(config.dictionary_path); });

    const Category* category = catalog.find_category(config.category_id);
    if (!category) throw ConfigError("no such category: " + config.category_id);
    const Prompt* base = category->find_prompt(config.prompt_id);
    if (!base) throw ConfigError("no such prompt: " + config.prompt_id);
    const Concept* target_concept = category->find_concept(config.concept_id);
    if (!target_concept) throw ConfigError("no such concept: " + config.concept_id);

    auto backend = stage("backend", [&] {
        if (!config.backend_doc) throw ConfigError("run config has no backend");
        return make_backend(*config.backend_doc);
    });

    std::filesystem::create_directories(config.output_dir);

    const auto candidates = stage("enumerate", [&] {
        auto set = enumerate_candidates(*base, dict, config.max_replacements,
                                        config.candidate_cap);
        if (set.candidates.empty())
            throw ValidationError("no replaceable words in prompt " + base->id);
        std::ofstream out(config.output_dir / "candidates.jsonl");
        for (const auto& c : set.candidates)
            out << candidate_to_json(c).dump() << "\n";
        return set;
    });

    const auto selection = stage("select", [&] {
        const auto targets = build_target_set(*target_concept, *backend, config.variants);
        LossConfig loss_cfg;
        loss_cfg.horizon = static_cast<int>(targets.max_sequence_length());
        loss_cfg.direction = config.direction;
        auto result = select_candidate(candidates, targets, loss_cfg, *backend);

        nlohmann::json losses = nlohmann::json::array();
        for (std::size_t i = 0; i < result.losses.size(); ++i)
            losses.push_back({{"candidate_id", candidates.candidates[i].prompt.id},
                              {"value", result.losses[i].value},
                              {"union_probability", result.losses[i].union_probability},
                              {"clamped", result.losses[i].clamped}});
        std::ofstream out(config.output_dir / "selection.json");
        out << nlohmann::json{{"chosen_id", result.chosen.id}, {"losses", losses}}
                   .dump(2)
            << "\n";
        return result;
    });

    SamplingRequest request;
    request.n = config.n;
    request.max_tokens = config.max_tokens;
    request.temperature = config.temperature;
    request.seed = config.seed;

    auto evaluate = [&](const std::string& run_name, const Prompt& prompt) {
        RunStore store(config.output_dir / "runs" / run_name);
        nlohmann::json snapshot = {
            {"run_id", run_name},
            {"prompt_id", prompt.id},
            {"prompt_text", prompt.text},
            {"concept_id", target_concept->id},
            {"backend", backend->descriptor().name},
            {"n", config.n},
            {"max_tokens", config.max_tokens},
            {"temperature", config.temperature ? nlohmann::json(*config.temperature)
                                               : nlohmann::json(nullptr)},
            {"seed", config.seed ? nlohmann::json(*config.seed) : nlohmann::json(nullptr)},
            {"started_at", timestamp_utc()}};
        store.write_config(snapshot);
        return evaluate_prompt(prompt, *target_concept, *backend, request, &store);
    };

    const auto base_profile =
        stage("evaluate-base", [&] { return evaluate("base", *base); });
    const auto chosen_profile = stage("evaluate-chosen", [&] {
        return evaluate("chosen", selection.chosen);
    });

    stage("compare", [&] {
        auto record = compare_pair(base_profile, chosen_profile);
        record.replacements = static_cast<int>(
            replacement_count(candidates.candidates[selection.chosen_index]));
        std::ofstream out(config.output_dir / "improvement.json");
        out << improvement_to_json(record).dump(2) << "\n";
        write_report_csv(config.output_dir / "report.csv", record);
        return 0;
    });

    return config.output_dir;
}

void export_report(const std::filesystem::path& experiment_dir,
                   const std::string& format, const std::filesystem::path& out_path,
                   bool force) {
    const auto improvement_path = experiment_dir / "improvement.json";
    if (!std::filesystem::exists(improvement_path))
        throw ValidationError("experiment " + experiment_dir.string() +
                              " is incomplete: no improvement.json");
    if (std::filesystem::exists(out_path) && !force)
        throw ConfigError("output file " + out_path.string() +
                          " exists; pass --force to overwrite");

    std::ifstream in(improvement_path);
    nlohmann::json doc;
    in >> doc;
    const auto record = improvement_from_json(doc);

    if (format == "csv") {
        write_report_csv(out_path, record);
    } else if (format == "json") {
        std::ofstream out(out_path);
        out << report_rows_json(record).dump(2) << "\n";
    } else {
        throw ConfigError("unknown report format: " + format);
    }
}

} // namespace pbias
