#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pbias/backend.hpp"
#include "pbias/catalog.hpp"

namespace pbias {

// Per-prefix-length mention frequency for one prompt/concept/backend run.
// counts[k-1] = number of samples whose first-k-token prefix mentions the
// target_concept; cumulative (once mentioned, counted at every larger k), so counts
// are non-decreasing in k.
struct MentionProfile {
    std::string prompt_id;
    std::string concept_id;
    std::string backend_name;
    int n = 0;
    int max_tokens = 0;
    std::vector<std::int64_t> counts;

    double rate(int k) const; // counts[k-1] / n
};

nlohmann::json profile_to_json(const MentionProfile& profile);
MentionProfile profile_from_json(const nlohmann::json& doc);

struct ImprovementRecord {
    MentionProfile base;
    MentionProfile perturbed;
    int replacements = -1; // replacement_count of the perturbed candidate, if known

    // Computed from integer counts so decimal rates stay exact:
    // absolute(k) = (c_pert - c_base) / n.
    double absolute(int k) const;
    // relative(k) = (c_pert - c_base) / c_base; absent when the base count is 0.
    std::optional<double> relative(int k) const;
};

nlohmann::json improvement_to_json(const ImprovementRecord& record);
ImprovementRecord improvement_from_json(const nlohmann::json& doc);

// One directory per run: config.json, samples.jsonl, profile.json. Samples
// are appended incrementally; a crashed run resumes from the last completed
// index.
class RunStore {
public:
    explicit RunStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    void write_config(const nlohmann::json& config);
    void append_sample(int index, const ResponseSample& sample);
    std::vector<ResponseSample> load_samples() const; // in index order
    int next_index() const;                           // resume cursor
    void write_profile(const MentionProfile& profile);
    MentionProfile load_profile() const;

private:
    std::filesystem::path dir_;
};

MentionProfile build_profile(const Prompt& prompt, const Concept& target_concept,
                             const std::string& backend_name,
                             const std::vector<ResponseSample>& samples,
                             int max_tokens);

// Samples `request.n` responses, scans prefixes for mentions, persists the
// run when a store is given. Resumes from the store's cursor if it already
// holds samples.
MentionProfile evaluate_prompt(const Prompt& prompt, const Concept& target_concept,
                               Backend& backend, const SamplingRequest& request,
                               RunStore* store = nullptr);

// Throws ValidationError when the profiles disagree on concept/n/max_tokens.
ImprovementRecord compare_pair(const MentionProfile& base,
                               const MentionProfile& perturbed);

struct SpreadResult {
    std::vector<double> spread; // per k: max over pairs of |rate_i - rate_j|
    std::vector<std::pair<std::string, std::string>> argmax_pair; // prompt ids per k
};

SpreadResult paraphrase_spread(const std::vector<MentionProfile>& profiles);

struct AggregateResult {
    std::vector<double> average;  // over records whose base rate at k=K is in the window
    std::vector<double> maximum;  // over all records, unfiltered
    int averaged_records = 0;     // size of the filtered selection
};

AggregateResult aggregate_improvements(const std::vector<ImprovementRecord>& records,
                                       double base_rate_min, double base_rate_max);

struct SweepCell {
    double temperature = 0.0;
    std::string prompt_id;
    std::optional<MentionProfile> profile;
    std::string error; // non-empty when this cell failed; the sweep continues
};

std::vector<SweepCell> temperature_sweep(const std::vector<Prompt>& prompts,
                                         const Concept& target_concept, Backend& backend,
                                         const std::vector<double>& temperatures,
                                         const SamplingRequest& request);

// count -> max absolute improvement at k = max_tokens; counts with no data omitted.
std::map<int, double> synonym_count_breakdown(
    const std::vector<ImprovementRecord>& records);

// The seed template sent to a chat backend to collect paraphrases.
std::string paraphrase_request_text(const std::string& category_name);

struct ParaphraseResult {
    std::vector<Prompt> prompts; // provenance=paraphrase, unreviewed
    std::string raw_reply;       // persisted verbatim for audit
};

ParaphraseResult paraphrase_generate(const std::string& category_name,
                                     Backend& chat_backend, int count);

struct StabilityResult {
    MentionProfile first_half;
    MentionProfile second_half;
    std::vector<std::int64_t> count_gap; // |counts_a - counts_b| per k
};

// Diagnostic: two half-size batches, reported without any enforced threshold.
StabilityResult stability_check(const Prompt& prompt, const Concept& target_concept,
                                Backend& backend, const SamplingRequest& request);

} // namespace pbias
