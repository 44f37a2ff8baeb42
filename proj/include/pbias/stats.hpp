#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pbias/backend.hpp"

namespace pbias {

struct PearsonResult {
    double rho = 0.0;
    double p_value = 1.0; // two-sided, t-transform with n-2 degrees of freedom
    int n = 0;
};

// Throws ValidationError on length mismatch, n < 3, or zero variance.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

enum class CorrelationClass { uncorrelated, weak, moderate, strong };

std::string to_string(CorrelationClass c);

// |rho| <= 0.1 uncorrelated; <= 0.4 weak; < 0.7 moderate; >= 0.7 strong.
CorrelationClass classify_correlation(double rho);

struct SignAgreementResult {
    double fraction = 0.0; // over pairs where both deltas are non-zero
    int counted = 0;
    int excluded = 0;      // pairs with a zero delta on either side
    bool defined = false;  // false when every pair was excluded
};

SignAgreementResult sign_agreement(std::span<const double> deltas_a,
                                   std::span<const double> deltas_b);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct DistributionSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    int n = 0;
};

DistributionSummary summarize_distribution(std::vector<double> values);
nlohmann::json summary_to_json(const DistributionSummary& s);

struct SimilarityPair {
    std::string id_a;
    std::string id_b;
    std::string kind; // different-product | paraphrase | synonym-replaced
    std::string text_a;
    std::string text_b;
};

struct SimilarityReport {
    struct Entry {
        std::string id_a, id_b, kind;
        std::optional<double> score;
        std::string error;
    };
    std::vector<Entry> pairs;
    std::map<std::string, DistributionSummary> by_kind;
};

// Embeds both texts of each pair and reports cosine scores plus per-kind
// quartile summaries (box-plot export). Per-pair backend errors are recorded
// and the report proceeds.
SimilarityReport similarity_report(const std::vector<SimilarityPair>& pairs,
                                   Backend& embedder);

// Relative improvement of one prompt pair under one model; inputs with a zero
// base rate are excluded upstream and counted here.
struct TransferInput {
    std::string pair_id;
    std::string model;
    std::optional<double> relative_improvement; // absent = zero-base, excluded
};

struct TransferCell {
    std::string model_a, model_b;
    int shared_pairs = 0;
    int excluded_pairs = 0;
    bool available = false; // false when shared_pairs < 3
    PearsonResult correlation;
    CorrelationClass classification = CorrelationClass::uncorrelated;
    SignAgreementResult agreement;
};

// One cell per unordered model pair. `top`, when positive, keeps only the
// `top` shared pairs with the largest mean |relative improvement|.
std::vector<TransferCell> transfer_report(const std::vector<TransferInput>& inputs,
                                          int top = 0);

} // namespace pbias
