#pragma once

#include <string>
#include <vector>

#include "hadid/dataset.hpp"

namespace hadid {

struct AnovaResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    int df_between = 0;
    int df_within = 0;
};

// One-way ANOVA over >= 2 groups of >= 2 values each. All-identical data is
// DegenerateInput; zero within-variance with distinct means reports
// F = +inf, p = 0.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail of the F distribution: P(F(df1, df2) > f).
double f_distribution_sf(double f, int df1, int df2);

struct MeansTable {
    std::vector<std::string> dialects;              // column order
    std::vector<std::vector<double>> means;         // [feature][dialect], canonical feature order
};

MeansTable dialect_means(const FeatureTable& table);

struct FeatureRanking {
    std::vector<int> order;      // k feature indices, best F first
    std::vector<double> f_stats; // aligned with order
};

// Per-feature ANOVA with the class labels as groups; the k largest F win,
// ties broken by canonical feature order.
FeatureRanking rank_features(const std::vector<std::array<double, kFeatureCount>>& rows,
                             const std::vector<std::string>& labels, int k);

}  // namespace hadid
