#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pbias/backend.hpp"
#include "pbias/scoring.hpp"

namespace pbias {

// Everything `pipeline run` needs: data files, backend, attack and eval
// parameters, output directory.
struct RunConfig {
    std::filesystem::path catalog_path;
    std::filesystem::path dictionary_path;

    // backend: {"kind":"toy","model":path} or {"kind":"http", ...endpoint config}
    nlohmann::json* backend_doc = nullptr; // owned by the parsed config document

    std::string category_id;
    std::string prompt_id;
    std::string concept_id;

    std::size_t max_replacements = 7;
    std::uint64_t candidate_cap = 100000;
    Direction direction = Direction::minimize;
    VariantPolicy variants;

    int n = 1000;
    int max_tokens = 64;
    std::optional<double> temperature;
    std::optional<std::uint64_t> seed;

    std::filesystem::path output_dir;
};

struct ParsedRunConfig {
    RunConfig config;
    std::shared_ptr<nlohmann::json> document; // keeps backend_doc alive
};

// Throws ConfigError when referenced files are missing or fields are malformed.
ParsedRunConfig load_run_config(const std::filesystem::path& path);

std::unique_ptr<Backend> make_backend(const nlohmann::json& backend_doc);

// enumerate -> select -> evaluate(base) -> evaluate(chosen) -> compare.
// Persists candidates.jsonl, selection.json, runs/base/, runs/chosen/,
// improvement.json, and report.csv under config.output_dir. Throws with the
// failing stage named; partial artifacts stay on disk.
std::filesystem::path run_pipeline(const RunConfig& config, bool force = false);

// Re-exports a completed experiment directory as report.{csv,json}.
void export_report(const std::filesystem::path& experiment_dir,
                   const std::string& format, const std::filesystem::path& out_path,
                   bool force = false);

// Deterministic number formatting shared by every CSV/JSON writer (shortest
// round-trip representation).
std::string format_double(double value);

} // namespace pbias
