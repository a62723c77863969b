#include "hadid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hadid/error.hpp"

namespace hadid {

namespace {

constexpr double kBetaTolerance = 1e-12;
constexpr int kBetaMaxIterations = 400;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIterations; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kBetaTolerance) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
    double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_continued_fraction(a, b, x) / a;
    return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double f, int df1, int df2) {
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    // P(F > f) = I_{df2/(df2 + df1 f)}(df2/2, df1/2); this form avoids the
    // 1 - CDF cancellation for large f.
    double x = df2 / (df2 + df1 * f);
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x);
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        raise(Errc::DegenerateInput, "need at least 2 groups, got " + std::to_string(groups.size()));
    size_t total_n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            raise(Errc::DegenerateInput, "every group needs at least 2 values");
        total_n += g.size();
    }

    const double first = groups[0][0];
    bool all_identical = true;
    for (const auto& g : groups)
        for (double v : g)
            if (v != first) { all_identical = false; break; }
    if (all_identical) raise(Errc::DegenerateInput, "all values identical across all groups");

    double grand_sum = 0.0;
    for (const auto& g : groups) grand_sum = std::accumulate(g.begin(), g.end(), grand_sum);
    const double grand_mean = grand_sum / static_cast<double>(total_n);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }

    AnovaResult res;
    res.df_between = static_cast<int>(groups.size()) - 1;
    res.df_within = static_cast<int>(total_n - groups.size());

    const double ms_between = ss_between / res.df_between;
    const double ms_within = ss_within / res.df_within;
    if (ms_within <= 0.0) {
        // Distinct group means with zero scatter inside groups.
        res.f_stat = std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        return res;
    }
    res.f_stat = ms_between / ms_within;
    res.p_value = f_distribution_sf(res.f_stat, res.df_between, res.df_within);
    return res;
}

MeansTable dialect_means(const FeatureTable& table) {
    if (table.empty()) raise(Errc::EmptyGroup, "empty feature table");

    std::map<std::string, std::pair<std::array<double, kFeatureCount>, size_t>> acc;
    for (const FeatureRow& row : table) {
        auto& [sums, count] = acc[row.dialect];
        auto vals = row.features.values();
        for (size_t i = 0; i < kFeatureCount; ++i) sums[i] += vals[i];
        ++count;
    }

    MeansTable out;
    out.means.assign(kFeatureCount, std::vector<double>(acc.size(), 0.0));
    size_t col = 0;
    for (const auto& [dialect, entry] : acc) {
        out.dialects.push_back(dialect);
        for (size_t i = 0; i < kFeatureCount; ++i)
            out.means[i][col] = entry.first[i] / static_cast<double>(entry.second);
        ++col;
    }
    return out;
}

FeatureRanking rank_features(const std::vector<std::array<double, kFeatureCount>>& rows,
                             const std::vector<std::string>& labels, int k) {
    if (rows.size() != labels.size())
        raise(Errc::LengthMismatch, "rows and labels differ in length");
    if (k < 1 || static_cast<size_t>(k) > kFeatureCount)
        raise(Errc::InvalidConfig, "k must be in [1, " + std::to_string(kFeatureCount) + "]");

    std::map<std::string, std::vector<size_t>> by_class;
    for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    if (by_class.size() < 2) raise(Errc::DegenerateInput, "need at least 2 classes present");

    std::array<double, kFeatureCount> f_stats{};
    for (size_t feat = 0; feat < kFeatureCount; ++feat) {
        std::vector<std::vector<double>> groups;
        groups.reserve(by_class.size());
        for (const auto& [label, idxs] : by_class) {
            std::vector<double> g;
            g.reserve(idxs.size());
            for (size_t i : idxs) g.push_back(rows[i][feat]);
            groups.push_back(std::move(g));
        }
        try {
            f_stats[feat] = anova_oneway(groups).f_stat;
        } catch (const Error& e) {
            if (e.code() == Errc::DegenerateInput)
                throw Error(Errc::DegenerateInput,
                            std::string(kFeatureNames[feat]) + ": " + e.what());
            throw;
        }
    }

    std::vector<int> order(kFeatureCount);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return f_stats[a] > f_stats[b]; });

    FeatureRanking ranking;
    ranking.order.assign(order.begin(), order.begin() + k);
    for (int idx : ranking.order) ranking.f_stats.push_back(f_stats[idx]);
    return ranking;
}

}  // namespace hadid
