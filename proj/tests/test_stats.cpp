#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "pbias/errors.hpp"
#include "pbias/stats.hpp"
#include "pbias/toy_model.hpp"

using namespace pbias;

TEST_CASE("pearson recovers exact linear relationships") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> up = {2.0, 4.0, 6.0, 8.0};
    const std::vector<double> down = {8.0, 6.0, 4.0, 2.0};

    auto r = pearson(x, up);
    CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.n == 4);

    r = pearson(x, down);
    CHECK(r.rho == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson matches the covariance-formula oracle") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y = {1.0, 3.0, 2.0, 5.0};
    const auto r = pearson(x, y);
    CHECK(std::abs(r.rho - test_oracle::pearson_by_definition(x, y)) <= 1e-12);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value < 1.0);

    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng() % 20;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = unif(rng);
            b[i] = unif(rng);
        }
        try {
            const auto got = pearson(a, b);
            CHECK(std::abs(got.rho - test_oracle::pearson_by_definition(a, b)) <= 1e-12);
        } catch (const ValidationError&) {
            // zero-variance draw; astronomically unlikely but legal to reject
        }
    }
}

TEST_CASE("pearson is invariant under affine rescaling") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 7.0};
    const std::vector<double> y = {1.0, 3.0, 2.0, 5.0, 4.0};
    std::vector<double> scaled;
    for (double v : x) scaled.push_back(3.5 * v - 12.0);
    CHECK(pearson(scaled, y).rho == doctest::Approx(pearson(x, y).rho).epsilon(1e-12));
}

TEST_CASE("pearson rejects degenerate inputs") {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0, 2.0},
                            std::vector<double>{1.0, 2.0}),
                    ValidationError);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{5.0, 5.0, 5.0}), ValidationError);
}

TEST_CASE("correlation classes split at the documented thresholds") {
    CHECK(classify_correlation(0.86) == CorrelationClass::strong);
    CHECK(classify_correlation(0.44) == CorrelationClass::moderate);
    CHECK(classify_correlation(0.05) == CorrelationClass::uncorrelated);
    CHECK(classify_correlation(-0.86) == CorrelationClass::strong);

    CHECK(classify_correlation(0.1) == CorrelationClass::uncorrelated);
    CHECK(classify_correlation(0.4) == CorrelationClass::weak);
    CHECK(classify_correlation(0.7) == CorrelationClass::strong);
    CHECK(classify_correlation(0.69) == CorrelationClass::moderate);
    CHECK(to_string(CorrelationClass::moderate) == "moderate");
}

TEST_CASE("sign agreement excludes zero deltas") {
    const std::vector<double> a = {0.1, -0.2, 0.0};
    const std::vector<double> b = {0.3, -0.1, 0.5};
    auto result = sign_agreement(a, b);
    CHECK(result.defined);
    CHECK(result.fraction == 1.0);
    CHECK(result.counted == 2);
    CHECK(result.excluded == 1);

    const std::vector<double> neg = {-0.3, 0.1, 0.5};
    result = sign_agreement(a, neg);
    CHECK(result.fraction == 0.0);
    CHECK(result.counted == 2);

    const std::vector<double> zeros = {0.0, 0.0, 0.0};
    result = sign_agreement(a, zeros);
    CHECK_FALSE(result.defined);
    CHECK(result.excluded == 3);

    CHECK_THROWS_AS(sign_agreement(a, std::vector<double>{1.0}), ValidationError);
    CHECK_THROWS_AS(sign_agreement(std::vector<double>{}, std::vector<double>{}),
                    ValidationError);
}

TEST_CASE("cosine similarity") {
    const std::vector<double> u = {1.0, 0.0};
    const std::vector<double> v = {0.6, 0.8};
    CHECK(cosine_similarity(u, v) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(u, std::vector<double>{-2.0, 0.0}) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_similarity(u, std::vector<double>{0.0, 0.0}),
                    ValidationError);
    CHECK_THROWS_AS(cosine_similarity(u, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("distribution summaries use linear-interpolation quantiles") {
    const auto s = summarize_distribution({4.0, 1.0, 3.0, 2.0});
    CHECK(s.min == 1.0);
    CHECK(s.q1 == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(s.max == 4.0);
    CHECK(s.n == 4);

    const auto single = summarize_distribution({7.0});
    CHECK(single.min == 7.0);
    CHECK(single.median == 7.0);
    CHECK(single.max == 7.0);

    CHECK_THROWS_AS(summarize_distribution({}), ValidationError);
}

TEST_CASE("similarity report scores pairs and survives per-pair failures") {
    HashEmbedder embedder;
    const std::vector<SimilarityPair> pairs = {
        {"a", "a2", "synonym-replaced", "What is the best phone?",
         "What is the best phone?"},
        {"a", "b", "different-product", "What is the best phone?",
         "What is the best car?"},
    };
    const auto report = similarity_report(pairs, embedder);
    REQUIRE(report.pairs.size() == 2);
    REQUIRE(report.pairs[0].score.has_value());
    CHECK(*report.pairs[0].score == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(report.pairs[1].score.has_value());
    CHECK(*report.pairs[1].score < 1.0);
    CHECK(report.by_kind.at("synonym-replaced").n == 1);
    CHECK(report.by_kind.at("different-product").n == 1);

    // An embedder-less backend fails every pair but the report still returns.
    class NoEmbed : public Backend {
    public:
        NoEmbed() { descriptor_.name = "no-embed"; }
        const BackendDescriptor& descriptor() const override { return descriptor_; }

    private:
        BackendDescriptor descriptor_;
    } no_embed;
    const auto failed = similarity_report(pairs, no_embed);
    REQUIRE(failed.pairs.size() == 2);
    CHECK_FALSE(failed.pairs[0].score.has_value());
    CHECK_FALSE(failed.pairs[0].error.empty());
    CHECK(failed.by_kind.empty());
}

TEST_CASE("transfer cells need three shared pairs and track exclusions") {
    auto input = [](std::string pair, std::string model,
                    std::optional<double> rel) {
        return TransferInput{std::move(pair), std::move(model), rel};
    };

    SUBCASE("identical improvement vectors correlate perfectly") {
        const std::vector<TransferInput> inputs = {
            input("p1", "m1", 0.5), input("p2", "m1", 1.5), input("p3", "m1", -0.2),
            input("p1", "m2", 0.5), input("p2", "m2", 1.5), input("p3", "m2", -0.2),
        };
        const auto cells = transfer_report(inputs);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].available);
        CHECK(cells[0].shared_pairs == 3);
        CHECK(cells[0].correlation.rho == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cells[0].classification == CorrelationClass::strong);
        CHECK(cells[0].agreement.fraction == 1.0);
    }

    SUBCASE("two shared pairs are not enough") {
        const std::vector<TransferInput> inputs = {
            input("p1", "m1", 0.5), input("p2", "m1", 1.5),
            input("p1", "m2", 0.4), input("p2", "m2", 1.0),
        };
        const auto cells = transfer_report(inputs);
        REQUIRE(cells.size() == 1);
        CHECK_FALSE(cells[0].available);
        CHECK(cells[0].shared_pairs == 2);
    }

    SUBCASE("zero-base exclusions are counted, not correlated") {
        const std::vector<TransferInput> inputs = {
            input("p1", "m1", 0.5),          input("p2", "m1", 1.5),
            input("p3", "m1", -0.2),         input("p4", "m1", std::nullopt),
            input("p1", "m2", 0.4),          input("p2", "m2", 1.2),
            input("p3", "m2", -0.1),         input("p4", "m2", 0.9),
        };
        const auto cells = transfer_report(inputs);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].available);
        CHECK(cells[0].shared_pairs == 3);
        CHECK(cells[0].excluded_pairs == 1);
    }

    SUBCASE("top-N keeps the largest-magnitude shared pairs") {
        const std::vector<TransferInput> inputs = {
            input("p1", "m1", 0.1),  input("p2", "m1", 2.0),
            input("p3", "m1", -1.5), input("p4", "m1", 0.2),
            input("p1", "m2", 0.1),  input("p2", "m2", 2.0),
            input("p3", "m2", -1.5), input("p4", "m2", 0.2),
        };
        const auto cells = transfer_report(inputs, 3);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].shared_pairs == 3); // p1/p2/p3 survive, p4 dropped
        CHECK(cells[0].available);
        CHECK(cells[0].correlation.rho == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("three models give three unordered cells") {
        std::vector<TransferInput> inputs;
        for (const char* m : {"m1", "m2", "m3"})
            for (int p = 1; p <= 3; ++p)
                inputs.push_back(input("p" + std::to_string(p), m, 0.1 * p));
        const auto cells = transfer_report(inputs);
        CHECK(cells.size() == 3);
    }
}
