#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace paireval {

// Pearson r, Spearman rho, their two-sided p-values, and the sample size for
// one (metric scores, human scores) pairing.
struct CorrelationReport {
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    double p_pearson = 1.0;
    double p_spearman = 1.0;
    std::size_t n = 0;
};

// Product-moment coefficient. Throws DataError on length mismatch, n < 2, or
// a constant vector (undefined correlation).
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson on fractional ranks; ties get the mean of the rank positions they
// span.
double spearman(std::span<const double> x, std::span<const double> y);

// 1-based average ranks, e.g. [1, 2, 2, 3] -> [1, 2.5, 2.5, 4].
std::vector<double> fractional_ranks(std::span<const double> values);

// Two-sided p from t = r*sqrt((n-2)/(1-r^2)) against Student t with n-2
// degrees of freedom. |r| = 1 -> 0 by convention. Requires n >= 3.
double p_value(double r, std::size_t n);

// Seeded permutation test: shuffles y, recomputes `coefficient`, and returns
// (1 + #{|perm| >= |observed|}) / (1 + permutations).
double permutation_p_value(std::span<const double> x, std::span<const double> y,
                           double (*coefficient)(std::span<const double>, std::span<const double>),
                           std::size_t permutations, std::uint64_t seed);

struct CorrelationOptions {
    bool permutation = false;
    std::size_t permutations = 10000;
    std::uint64_t seed = 0;
};

// Full report for id-aligned score pairings. Ids present on one side but not
// the other are an error listing the missing ids.
CorrelationReport correlate(std::span<const std::pair<std::string, double>> metric_scores,
                            std::span<const std::pair<std::string, double>> human_scores,
                            const CorrelationOptions& opts = {});

CorrelationReport correlate_values(std::span<const double> metric, std::span<const double> human,
                                   const CorrelationOptions& opts = {});

// Sentence-level BLEU-2: uniform 1/2 weights over 1- and 2-grams, clipped
// modified precisions, geometric mean, brevity penalty exp(1 - r/c) for
// c < r. No smoothing: zero matches at either order -> 0. Whitespace tokens.
double bleu2(const std::string& candidate, const std::string& reference);

// Least-squares fit y = slope*x + intercept; x constant -> DataError.
struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
};

Regression linear_regression(std::span<const double> x, std::span<const double> y);

// Scatter data for metric-vs-human plots: CSV "human,metric,human_jittered"
// with Normal(0, 0.03^2) jitter on the human axis (seeded), plus the fit.
struct PlotData {
    std::vector<double> human;
    std::vector<double> metric;
    std::vector<double> human_jittered;
    Regression regression;
};

PlotData plot_data(std::span<const double> metric, std::span<const double> human,
                   std::uint64_t jitter_seed);

std::string plot_data_csv(const PlotData& data);

} // namespace paireval
