#include "pbias/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

double MentionProfile::rate(int k) const {
    if (k < 1 || k > max_tokens || n <= 0)
        throw ValidationError("rate(k) out of range");
    return static_cast<double>(counts[static_cast<std::size_t>(k - 1)]) /
           static_cast<double>(n);
}

nlohmann::json profile_to_json(const MentionProfile& p) {
    return {{"prompt_id", p.prompt_id}, {"concept_id", p.concept_id},
            {"backend", p.backend_name}, {"n", p.n},
            {"max_tokens", p.max_tokens}, {"counts", p.counts}};
}

MentionProfile profile_from_json(const nlohmann::json& doc) {
    MentionProfile p;
    try {
        p.prompt_id = doc.at("prompt_id").get<std::string>();
        p.concept_id = doc.at("concept_id").get<std::string>();
        p.backend_name = doc.at("backend").get<std::string>();
        p.n = doc.at("n").get<int>();
        p.max_tokens = doc.at("max_tokens").get<int>();
        p.counts = doc.at("counts").get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed profile: ") + e.what());
    }
    return p;
}

double ImprovementRecord::absolute(int k) const {
    const auto i = static_cast<std::size_t>(k - 1);
    return static_cast<double>(perturbed.counts[i] - base.counts[i]) /
           static_cast<double>(base.n);
}

std::optional<double> ImprovementRecord::relative(int k) const {
    const auto i = static_cast<std::size_t>(k - 1);
    if (base.counts[i] == 0) return std::nullopt;
    return static_cast<double>(perturbed.counts[i] - base.counts[i]) /
           static_cast<double>(base.counts[i]);
}

nlohmann::json improvement_to_json(const ImprovementRecord& r) {
    return {{"base", profile_to_json(r.base)},
            {"perturbed", profile_to_json(r.perturbed)},
            {"replacements", r.replacements}};
}

ImprovementRecord improvement_from_json(const nlohmann::json& doc) {
    ImprovementRecord r;
    r.base = profile_from_json(doc.at("base"));
    r.perturbed = profile_from_json(doc.at("perturbed"));
    r.replacements = doc.value("replacements", -1);
    return r;
}

RunStore::RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void RunStore::write_config(const nlohmann::json& config) {
    std::ofstream out(dir_ / "config.json");
    out << config.dump(2) << "\n";
}

void RunStore::append_sample(int index, const ResponseSample& sample) {
    std::ofstream out(dir_ / "samples.jsonl", std::ios::app);
    nlohmann::json row = {{"idx", index},
                          {"text", sample.text},
                          {"token_texts", sample.token_texts},
                          {"finish_reason",
                           sample.finish_reason == FinishReason::length ? "length"
                                                                        : "stop"}};
    out << row.dump() << "\n";
}

std::vector<ResponseSample> RunStore::load_samples() const {
    std::vector<std::pair<int, ResponseSample>> rows;
    std::ifstream in(dir_ / "samples.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line);
        ResponseSample s;
        s.text = row.at("text").get<std::string>();
        s.token_texts = row.at("token_texts").get<std::vector<std::string>>();
        s.finish_reason = row.value("finish_reason", "length") == "stop"
                              ? FinishReason::stop
                              : FinishReason::length;
        rows.emplace_back(row.at("idx").get<int>(), std::move(s));
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ResponseSample> samples;
    samples.reserve(rows.size());
    for (auto& [idx, s] : rows) samples.push_back(std::move(s));
    return samples;
}

int RunStore::next_index() const {
    int next = 0;
    std::ifstream in(dir_ / "samples.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        next = std::max(next, nlohmann::json::parse(line).at("idx").get<int>() + 1);
    }
    return next;
}

void RunStore::write_profile(const MentionProfile& profile) {
    std::ofstream out(dir_ / "profile.json");
    out << profile_to_json(profile).dump(2) << "\n";
}

MentionProfile RunStore::load_profile() const {
    std::ifstream in(dir_ / "profile.json");
    if (!in) throw ParseError("no profile.json in " + dir_.string());
    nlohmann::json doc;
    in >> doc;
    return profile_from_json(doc);
}

MentionProfile build_profile(const Prompt& prompt, const Concept& target_concept,
                             const std::string& backend_name,
                             const std::vector<ResponseSample>& samples,
                             int max_tokens) {
    MentionProfile profile;
    profile.prompt_id = prompt.id;
    profile.concept_id = target_concept.id;
    profile.backend_name = backend_name;
    profile.n = static_cast<int>(samples.size());
    profile.max_tokens = max_tokens;
    profile.counts.assign(static_cast<std::size_t>(max_tokens), 0);

    for (const auto& sample : samples) {
        // Smallest k whose prefix mentions the target_concept; the sample then
        // counts at every k' >= k.
        std::string prefix;
        int first_k = 0;
        const int limit =
            std::min<int>(max_tokens, static_cast<int>(sample.token_texts.size()));
        for (int k = 1; k <= limit; ++k) {
            prefix += sample.token_texts[static_cast<std::size_t>(k - 1)];
            if (mention_in_text(prefix, target_concept)) {
                first_k = k;
                break;
            }
        }
        if (first_k == 0) continue;
        for (int k = first_k; k <= max_tokens; ++k)
            ++profile.counts[static_cast<std::size_t>(k - 1)];
    }
    return profile;
}

MentionProfile evaluate_prompt(const Prompt& prompt, const Concept& target_concept,
                               Backend& backend, const SamplingRequest& request,
                               RunStore* store) {
    SamplingRequest req = request;
    req.prompt_text = prompt.text;

    std::vector<ResponseSample> samples;
    if (store) {
        samples = store->load_samples();
        req.start_index = static_cast<int>(samples.size());
        req.n = request.n - req.start_index;
    }
    if (req.n > 0) {
        auto fresh = backend.sample(req);
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            if (store)
                store->append_sample(req.start_index + static_cast<int>(i), fresh[i]);
            samples.push_back(std::move(fresh[i]));
        }
    }

    auto profile = build_profile(prompt, target_concept, backend.descriptor().name, samples,
                                 request.max_tokens);
    if (store) store->write_profile(profile);
    return profile;
}

ImprovementRecord compare_pair(const MentionProfile& base,
                               const MentionProfile& perturbed) {
    if (base.concept_id != perturbed.concept_id)
        throw ValidationError("compare_pair: target_concept mismatch");
    if (base.backend_name != perturbed.backend_name)
        throw ValidationError("compare_pair: backend mismatch");
    if (base.n != perturbed.n || base.max_tokens != perturbed.max_tokens)
        throw ValidationError("compare_pair: run parameters differ");
    return {base, perturbed, -1};
}

SpreadResult paraphrase_spread(const std::vector<MentionProfile>& profiles) {
    if (profiles.size() < 2)
        throw ValidationError("paraphrase_spread needs at least 2 profiles");
    const auto& first = profiles.front();
    for (const auto& p : profiles) {
        if (p.concept_id != first.concept_id || p.backend_name != first.backend_name ||
            p.n != first.n || p.max_tokens != first.max_tokens)
            throw ValidationError("paraphrase_spread: profiles are not comparable");
    }

    SpreadResult result;
    for (int k = 1; k <= first.max_tokens; ++k) {
        double best = -1.0;
        std::pair<std::string, std::string> best_pair;
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            for (std::size_t j = i + 1; j < profiles.size(); ++j) {
                const double d = std::abs(profiles[i].rate(k) - profiles[j].rate(k));
                if (d > best) {
                    best = d;
                    best_pair = {profiles[i].prompt_id, profiles[j].prompt_id};
                }
            }
        }
        result.spread.push_back(best);
        result.argmax_pair.push_back(best_pair);
    }
    return result;
}

AggregateResult aggregate_improvements(const std::vector<ImprovementRecord>& records,
                                       double base_rate_min, double base_rate_max) {
    AggregateResult result;
    if (records.empty()) return result;
    const int max_tokens = records.front().base.max_tokens;

    std::vector<const ImprovementRecord*> filtered;
    for (const auto& r : records) {
        const double base_rate = r.base.rate(max_tokens);
        if (base_rate >= base_rate_min && base_rate <= base_rate_max)
            filtered.push_back(&r);
    }
    result.averaged_records = static_cast<int>(filtered.size());

    for (int k = 1; k <= max_tokens; ++k) {
        if (!filtered.empty()) {
            double sum = 0.0;
            for (const auto* r : filtered) sum += r->absolute(k);
            result.average.push_back(sum / static_cast<double>(filtered.size()));
        }
        double best = records.front().absolute(k);
        for (const auto& r : records) best = std::max(best, r.absolute(k));
        result.maximum.push_back(best);
    }
    return result;
}

std::vector<SweepCell> temperature_sweep(const std::vector<Prompt>& prompts,
                                         const Concept& target_concept, Backend& backend,
                                         const std::vector<double>& temperatures,
                                         const SamplingRequest& request) {
    for (double tau : temperatures)
        if (tau <= 0.0) throw ValidationError("temperature must be > 0");

    std::vector<SweepCell> cells;
    for (double tau : temperatures) {
        for (const auto& prompt : prompts) {
            SweepCell cell;
            cell.temperature = tau;
            cell.prompt_id = prompt.id;
            SamplingRequest req = request;
            req.temperature = tau;
            try {
                cell.profile = evaluate_prompt(prompt, target_concept, backend, req);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::map<int, double> synonym_count_breakdown(
    const std::vector<ImprovementRecord>& records) {
    std::map<int, double> by_count;
    for (const auto& r : records) {
        if (r.replacements < 0) continue;
        const double improvement = r.absolute(r.base.max_tokens);
        auto [it, inserted] = by_count.emplace(r.replacements, improvement);
        if (!inserted) it->second = std::max(it->second, improvement);
    }
    return by_count;
}

std::string paraphrase_request_text(const std::string& category_name) {
    return "Give me multiple rephrasings and add details to: 'What is the best " +
           category_name + "?'";
}

namespace {

std::string strip_bullet(std::string line) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    // "- ", "* ", "1. ", "12) " style lead-ins
    if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
        ++i;
    } else {
        std::size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1;
    }
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t end = line.size();
    while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    return line.substr(i, end - i);
}

} // namespace

ParaphraseResult paraphrase_generate(const std::string& category_name,
                                     Backend& chat_backend, int count) {
    SamplingRequest request;
    request.prompt_text = paraphrase_request_text(category_name);
    request.n = 1;
    request.max_tokens = 512;

    ParaphraseResult result;
    const auto samples = chat_backend.sample(request);
    if (samples.empty()) return result;
    result.raw_reply = samples.front().text;

    std::istringstream in(result.raw_reply);
    std::string line;
    int emitted = 0;
    while (std::getline(in, line) && emitted < count) {
        std::string text = strip_bullet(line);
        if (text.empty()) continue;
        Prompt p;
        p.id = category_name + "-para-" + std::to_string(++emitted);
        p.text = std::move(text);
        p.provenance = Provenance::paraphrase;
        result.prompts.push_back(std::move(p));
    }
    return result;
}

StabilityResult stability_check(const Prompt& prompt, const Concept& target_concept,
                                Backend& backend, const SamplingRequest& request) {
    if (request.n < 2)
        throw ValidationError("stability check needs n >= 2");
    const int half = request.n / 2;

    SamplingRequest first = request;
    first.n = half;
    SamplingRequest second = request;
    second.n = half;
    second.start_index = request.start_index + half;

    StabilityResult result;
    result.first_half = evaluate_prompt(prompt, target_concept, backend, first);
    result.second_half = evaluate_prompt(prompt, target_concept, backend, second);
    for (int k = 1; k <= request.max_tokens; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        result.count_gap.push_back(
            std::abs(result.first_half.counts[i] - result.second_half.counts[i]));
    }
    return result;
}

} // namespace pbias
