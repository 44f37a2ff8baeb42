#include "pbias/econ.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

PriceSheet parse_prices(const nlohmann::json& doc) {
    PriceSheet p;
    try {
        p.input_price_per_million = doc.at("input_price_per_million").get<double>();
        p.output_price_per_million = doc.at("output_price_per_million").get<double>();
        p.ad_price_per_impression = doc.value("ad_price_per_impression", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed price sheet: ") + e.what());
    }
    if (p.input_price_per_million < 0.0 || p.output_price_per_million < 0.0 ||
        p.ad_price_per_impression < 0.0)
        throw ValidationError("prices must be >= 0");
    return p;
}

PriceSheet load_prices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open price sheet: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("price sheet " + path.string() + ": " + e.what());
    }
    return parse_prices(doc);
}

double selection_cost(const PriceSheet& prices, int prompt_tokens) {
    return prices.input_price_per_million / 1e6 * prompt_tokens +
           prices.output_price_per_million / 1e6 * 1.0;
}

double paraphrase_cost(const PriceSheet& prices, int prompt_tokens, int gen_tokens,
                       int samples, double avg_prompts) {
    return (prices.input_price_per_million / 1e6 * prompt_tokens +
            prices.output_price_per_million / 1e6 * gen_tokens) *
           samples * avg_prompts;
}

Breakeven breakeven_mentions(double attack_cost, double ad_price_per_impression) {
    if (ad_price_per_impression <= 0.0)
        throw ValidationError("ad price per impression must be > 0");
    Breakeven b;
    b.raw_ratio = attack_cost / ad_price_per_impression;
    b.ceiling_mentions = static_cast<long long>(std::ceil(b.raw_ratio));
    if (b.ceiling_mentions < 1) b.ceiling_mentions = 1;
    return b;
}

} // namespace pbias
