#include "pbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "pbias/errors.hpp"

namespace pbias {

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3)
        throw ValidationError("pearson: need at least 3 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("pearson: zero variance");

    PearsonResult result;
    result.n = static_cast<int>(n);
    result.rho = sxy / std::sqrt(sxx * syy);
    result.rho = std::clamp(result.rho, -1.0, 1.0);

    const double df = static_cast<double>(n) - 2.0;
    if (std::abs(result.rho) >= 1.0) {
        result.p_value = 0.0;
    } else {
        const double t =
            result.rho * std::sqrt(df / (1.0 - result.rho * result.rho));
        boost::math::students_t dist(df);
        result.p_value = 2.0 * boost::math::cdf(dist, -std::abs(t));
    }
    return result;
}

std::string to_string(CorrelationClass c) {
    switch (c) {
    case CorrelationClass::uncorrelated: return "uncorrelated";
    case CorrelationClass::weak: return "weak";
    case CorrelationClass::moderate: return "moderate";
    case CorrelationClass::strong: return "strong";
    }
    return "uncorrelated";
}

CorrelationClass classify_correlation(double rho) {
    const double a = std::abs(rho);
    if (a <= 0.1) return CorrelationClass::uncorrelated;
    if (a <= 0.4) return CorrelationClass::weak;
    if (a < 0.7) return CorrelationClass::moderate;
    return CorrelationClass::strong;
}

SignAgreementResult sign_agreement(std::span<const double> deltas_a,
                                   std::span<const double> deltas_b) {
    if (deltas_a.size() != deltas_b.size())
        throw ValidationError("sign_agreement: length mismatch");
    if (deltas_a.empty())
        throw ValidationError("sign_agreement: empty input");

    SignAgreementResult result;
    int same = 0;
    for (std::size_t i = 0; i < deltas_a.size(); ++i) {
        if (deltas_a[i] == 0.0 || deltas_b[i] == 0.0) {
            ++result.excluded;
            continue;
        }
        ++result.counted;
        if ((deltas_a[i] > 0.0) == (deltas_b[i] > 0.0)) ++same;
    }
    if (result.counted > 0) {
        result.defined = true;
        result.fraction = static_cast<double>(same) / result.counted;
    }
    return result;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ValidationError("cosine_similarity: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw ValidationError("cosine_similarity: zero-norm input");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

// R-7 linear interpolation on the sorted sample.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

DistributionSummary summarize_distribution(std::vector<double> values) {
    if (values.empty())
        throw ValidationError("cannot summarize an empty distribution");
    std::sort(values.begin(), values.end());
    DistributionSummary s;
    s.n = static_cast<int>(values.size());
    s.min = values.front();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.max = values.back();
    return s;
}

nlohmann::json summary_to_json(const DistributionSummary& s) {
    return {{"min", s.min}, {"q1", s.q1},   {"median", s.median},
            {"q3", s.q3},   {"max", s.max}, {"n", s.n}};
}

SimilarityReport similarity_report(const std::vector<SimilarityPair>& pairs,
                                   Backend& embedder) {
    SimilarityReport report;
    std::map<std::string, std::vector<double>> scores_by_kind;
    for (const auto& pair : pairs) {
        SimilarityReport::Entry entry{pair.id_a, pair.id_b, pair.kind, std::nullopt, ""};
        try {
            const auto ea = embedder.embed(pair.text_a);
            const auto eb = embedder.embed(pair.text_b);
            entry.score = cosine_similarity(ea, eb);
            scores_by_kind[pair.kind].push_back(*entry.score);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        report.pairs.push_back(std::move(entry));
    }
    for (auto& [kind, scores] : scores_by_kind)
        report.by_kind.emplace(kind, summarize_distribution(std::move(scores)));
    return report;
}

std::vector<TransferCell> transfer_report(const std::vector<TransferInput>& inputs,
                                          int top) {
    std::set<std::string> model_set;
    for (const auto& in : inputs) model_set.insert(in.model);
    const std::vector<std::string> models(model_set.begin(), model_set.end());

    // (model, pair) -> relative improvement
    std::map<std::pair<std::string, std::string>, std::optional<double>> table;
    for (const auto& in : inputs) table[{in.model, in.pair_id}] = in.relative_improvement;

    std::vector<TransferCell> cells;
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            TransferCell cell;
            cell.model_a = models[i];
            cell.model_b = models[j];

            struct Shared {
                double a, b;
            };
            std::vector<Shared> shared;
            for (const auto& in : inputs) {
                if (in.model != cell.model_a) continue;
                auto other = table.find({cell.model_b, in.pair_id});
                if (other == table.end()) continue;
                if (!in.relative_improvement || !other->second) {
                    ++cell.excluded_pairs;
                    continue;
                }
                shared.push_back({*in.relative_improvement, *other->second});
            }

            if (top > 0 && static_cast<std::size_t>(top) < shared.size()) {
                std::stable_sort(shared.begin(), shared.end(),
                                 [](const Shared& x, const Shared& y) {
                                     return std::abs(x.a) + std::abs(x.b) >
                                            std::abs(y.a) + std::abs(y.b);
                                 });
                shared.resize(static_cast<std::size_t>(top));
            }
            cell.shared_pairs = static_cast<int>(shared.size());

            if (shared.size() >= 3) {
                std::vector<double> a, b;
                for (const auto& s : shared) {
                    a.push_back(s.a);
                    b.push_back(s.b);
                }
                try {
                    cell.correlation = pearson(a, b);
                    cell.classification = classify_correlation(cell.correlation.rho);
                    cell.agreement = sign_agreement(a, b);
                    cell.available = true;
                } catch (const ValidationError&) {
                    cell.available = false; // e.g. zero variance
                }
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

} // namespace pbias
