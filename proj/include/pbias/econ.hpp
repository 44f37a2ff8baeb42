#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

namespace pbias {

// Prices are dimensionless decimals (one currency, no FX).
struct PriceSheet {
    double input_price_per_million = 0.0;
    double output_price_per_million = 0.0;
    double ad_price_per_impression = 0.0; // CPM / 1000
};

PriceSheet parse_prices(const nlohmann::json& doc);
PriceSheet load_prices(const std::filesystem::path& path);

// Scoring one candidate: a single teacher-forced pass over the prompt plus
// one output token. Warns (via the CLI) above 400 prompt tokens.
double selection_cost(const PriceSheet& prices, int prompt_tokens);

// Sampling-based search: (input + output per sample) x samples x average
// prompts evaluated.
double paraphrase_cost(const PriceSheet& prices, int prompt_tokens, int gen_tokens,
                       int samples, double avg_prompts);

struct Breakeven {
    double raw_ratio = 0.0;       // attack_cost / ad_price
    long long ceiling_mentions = 0; // ceil(raw_ratio)
};

// Mentions needed to recoup the attack cost at the given per-impression ad
// price. Both the raw ratio and its ceiling are reported.
Breakeven breakeven_mentions(double attack_cost, double ad_price_per_impression);

} // namespace pbias
