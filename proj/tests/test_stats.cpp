#include "hadid/stats.hpp"

#include <cmath>

#include "doctest.h"
#include "hadid/error.hpp"
#include "hadid/rng.hpp"

using namespace hadid;

namespace {

// Closed form for df = (1, 4): the incomplete beta integral has an explicit
// antiderivative, so this is an independent route to the p-value.
double p_value_df1_4(double f) {
    double x = 1.0 * f / (1.0 * f + 4.0);
    double integral = 2.0 * std::sqrt(x) - (2.0 / 3.0) * std::pow(x, 1.5);  // a=1/2, b=2
    double beta = 4.0 / 3.0;                                                // B(1/2, 2)
    return 1.0 - integral / beta;
}

std::array<double, kFeatureCount> row_of(RandomStream& rng, double planted, int planted_idx) {
    std::array<double, kFeatureCount> row{};
    for (size_t i = 0; i < kFeatureCount; ++i) row[i] = rng.normal(0.0, 1.0);
    row[planted_idx] += planted;
    return row;
}

}  // namespace

TEST_CASE("worked ANOVA example: {1,2,3} vs {2,3,4}") {
    AnovaResult r = anova_oneway({{1, 2, 3}, {2, 3, 4}});
    CHECK(r.f_stat == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(r.df_between == 1);
    CHECK(r.df_within == 4);
    CHECK(r.p_value == doctest::Approx(0.288).epsilon(0.004));
    CHECK(r.p_value == doctest::Approx(p_value_df1_4(1.5)).epsilon(1e-9));
}

TEST_CASE("identical groups are degenerate") {
    try {
        anova_oneway({{5, 5, 5}, {5, 5, 5}});
        FAIL("expected DegenerateInput");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateInput);
    }
}

TEST_CASE("equal means give F = 0 and p = 1") {
    AnovaResult r = anova_oneway({{1, 1, 2, 2}, {1, 2, 1, 2}});
    CHECK(r.f_stat == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("zero within-variance with distinct means reports the infinity sentinel") {
    AnovaResult r = anova_oneway({{1, 1, 1}, {2, 2, 2}});
    CHECK(std::isinf(r.f_stat));
    CHECK(r.p_value == 0.0);
}

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(anova_oneway({{1, 2, 3}}), Error);
    CHECK_THROWS_AS(anova_oneway({{1.0}, {2, 3}}), Error);
}

TEST_CASE("shift invariance and scale invariance of F") {
    RandomStream rng(31);
    std::vector<std::vector<double>> groups(3);
    for (auto& g : groups)
        for (int i = 0; i < 8; ++i) g.push_back(rng.uniform(0.0, 5.0));

    AnovaResult base = anova_oneway(groups);
    auto shifted = groups;
    for (auto& g : shifted)
        for (double& v : g) v += 123.45;
    auto scaled = groups;
    for (auto& g : scaled)
        for (double& v : g) v *= -7.5;

    CHECK(anova_oneway(shifted).f_stat == doctest::Approx(base.f_stat).epsilon(1e-9));
    CHECK(anova_oneway(scaled).f_stat == doctest::Approx(base.f_stat).epsilon(1e-9));
}

TEST_CASE("p decreases monotonically in F") {
    for (auto [df1, df2] : {std::pair{1, 4}, {3, 20}, {4, 395}}) {
        double prev = 1.1;
        for (int i = 1; i <= 100; ++i) {
            double f = 0.1 * i;
            double p = f_distribution_sf(f, df1, df2);
            CHECK(p < prev);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            prev = p;
        }
    }
}

TEST_CASE("regularized incomplete beta edge values") {
    CHECK(regularized_incomplete_beta(0.5, 2.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(0.5, 2.0, 1.0) == 1.0);
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    for (double x : {0.1, 0.37, 0.62, 0.9}) {
        double lhs = regularized_incomplete_beta(1.7, 3.2, x);
        double rhs = 1.0 - regularized_incomplete_beta(3.2, 1.7, 1.0 - x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("dialect means over explicit rows") {
    FeatureTable table;
    auto push = [&](const std::string& dialect, double pct_v) {
        FeatureRow row;
        row.utterance_id = "u" + std::to_string(table.size());
        row.speaker_id = "s";
        row.dialect = dialect;
        row.features.pct_v = pct_v;
        table.push_back(row);
    };
    push("a", 40.0);
    push("a", 44.0);
    push("b", 50.0);

    MeansTable means = dialect_means(table);
    REQUIRE(means.dialects == std::vector<std::string>{"a", "b"});
    CHECK(means.means[0][0] == doctest::Approx(42.0));  // pct_v is feature 0
    CHECK(means.means[0][1] == doctest::Approx(50.0));

    CHECK_THROWS_AS(dialect_means({}), Error);
}

TEST_CASE("rank_features puts a planted signal first in at least 95 of 100 trials") {
    int planted_first = 0;
    const int kPitchRangeIdx = feature_index("pitch_range");
    for (int trial = 0; trial < 100; ++trial) {
        RandomStream rng(1000 + trial);
        std::vector<std::array<double, kFeatureCount>> rows;
        std::vector<std::string> labels;
        for (int i = 0; i < 40; ++i) {
            rows.push_back(row_of(rng, 0.0, kPitchRangeIdx));
            labels.push_back("x");
        }
        for (int i = 0; i < 40; ++i) {
            rows.push_back(row_of(rng, 2.5, kPitchRangeIdx));
            labels.push_back("y");
        }
        FeatureRanking ranking = rank_features(rows, labels, 3);
        if (ranking.order[0] == kPitchRangeIdx) ++planted_first;
    }
    CHECK(planted_first >= 95);
}

TEST_CASE("rank_features with k = 14 returns a permutation") {
    RandomStream rng(77);
    std::vector<std::array<double, kFeatureCount>> rows;
    std::vector<std::string> labels;
    for (int i = 0; i < 30; ++i) {
        rows.push_back(row_of(rng, i % 2 ? 1.0 : 0.0, 3));
        labels.push_back(i % 2 ? "a" : "b");
    }
    FeatureRanking ranking = rank_features(rows, labels, 14);
    std::vector<int> sorted = ranking.order;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < kFeatureCount; ++i) CHECK(sorted[i] == static_cast<int>(i));
}

TEST_CASE("rank_features names the offending feature on degenerate input") {
    std::vector<std::array<double, kFeatureCount>> rows;
    std::vector<std::string> labels;
    for (int i = 0; i < 6; ++i) {
        std::array<double, kFeatureCount> row{};
        row.fill(1.0);  // every feature constant
        rows.push_back(row);
        labels.push_back(i % 2 ? "a" : "b");
    }
    try {
        rank_features(rows, labels, 2);
        FAIL("expected DegenerateInput");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateInput);
        CHECK(std::string(e.what()).find("pct_v") != std::string::npos);
    }
}
