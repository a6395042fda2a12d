#include "paireval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "paireval/errors.hpp"
#include "paireval/rng.hpp"

namespace paireval {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
    if (x.size() != y.size())
        throw DataError("correlation inputs have different lengths: " + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()));
    if (x.size() < min_n)
        throw DataError("correlation needs at least " + std::to_string(min_n) + " points");
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double value) { return value == v.front(); });
}

std::vector<std::string> tokenize_whitespace(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

// Clipped n-gram precision: matches / candidate n-gram count.
std::pair<std::size_t, std::size_t> modified_precision(const std::vector<std::string>& cand,
                                                       const std::vector<std::string>& ref,
                                                       std::size_t n) {
    if (cand.size() < n) return {0, 0};
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        ref_counts[{ref.begin() + static_cast<std::ptrdiff_t>(i),
                    ref.begin() + static_cast<std::ptrdiff_t>(i + n)}]++;
    }
    std::map<std::vector<std::string>, std::size_t> cand_counts;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
        cand_counts[{cand.begin() + static_cast<std::ptrdiff_t>(i),
                     cand.begin() + static_cast<std::ptrdiff_t>(i + n)}]++;
    }
    std::size_t matches = 0, total = 0;
    for (const auto& [gram, count] : cand_counts) {
        total += count;
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches += std::min(count, it->second);
    }
    return {matches, total};
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2);
    if (is_constant(x) || is_constant(y))
        throw DataError("correlation undefined for a constant vector");

    const std::size_t n = x.size();
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
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) share the mean of 1-based ranks i+1..j+1.
        const double rank = static_cast<double>(i + j) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2);
    if (is_constant(x) || is_constant(y))
        throw DataError("correlation undefined for a constant vector");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

double p_value(double r, std::size_t n) {
    if (n < 3) throw DataError("p_value needs n >= 3");
    if (std::fabs(r) > 1.0) throw DataError("correlation coefficient out of [-1, 1]");
    if (std::fabs(r) == 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(dist, -std::fabs(t));
}

double permutation_p_value(std::span<const double> x, std::span<const double> y,
                           double (*coefficient)(std::span<const double>, std::span<const double>),
                           std::size_t permutations, std::uint64_t seed) {
    check_pair(x, y, 3);
    const double observed = std::fabs(coefficient(x, y));
    SplitMix64 rng = stream_for(seed, RngRole::kPermutation);
    std::vector<double> shuffled(y.begin(), y.end());
    std::size_t at_least = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        // Fisher-Yates with splitmix64 draws.
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            std::swap(shuffled[i], shuffled[rng.bounded(i + 1)]);
        }
        if (std::fabs(coefficient(x, shuffled)) >= observed) ++at_least;
    }
    return static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
}

CorrelationReport correlate_values(std::span<const double> metric, std::span<const double> human,
                                   const CorrelationOptions& opts) {
    check_pair(metric, human, 3);
    CorrelationReport report;
    report.n = metric.size();
    report.pearson_r = pearson(metric, human);
    report.spearman_rho = spearman(metric, human);
    if (opts.permutation) {
        report.p_pearson = permutation_p_value(metric, human, &pearson, opts.permutations, opts.seed);
        report.p_spearman =
            permutation_p_value(metric, human, &spearman, opts.permutations, opts.seed);
    } else {
        report.p_pearson = p_value(report.pearson_r, report.n);
        report.p_spearman = p_value(report.spearman_rho, report.n);
    }
    return report;
}

CorrelationReport correlate(std::span<const std::pair<std::string, double>> metric_scores,
                            std::span<const std::pair<std::string, double>> human_scores,
                            const CorrelationOptions& opts) {
    std::map<std::string, double> human_by_id;
    for (const auto& [id, value] : human_scores) human_by_id.emplace(id, value);

    std::set<std::string> metric_ids;
    std::vector<double> metric, human;
    std::vector<std::string> missing_human;
    metric.reserve(metric_scores.size());
    for (const auto& [id, value] : metric_scores) {
        metric_ids.insert(id);
        const auto it = human_by_id.find(id);
        if (it == human_by_id.end()) {
            missing_human.push_back(id);
            continue;
        }
        metric.push_back(value);
        human.push_back(it->second);
    }
    std::vector<std::string> missing_metric;
    for (const auto& [id, value] : human_by_id) {
        if (!metric_ids.count(id)) missing_metric.push_back(id);
    }
    if (!missing_human.empty() || !missing_metric.empty()) {
        std::string msg = "id mismatch between metric and human scores;";
        if (!missing_human.empty()) {
            msg += " no human score for:";
            for (const auto& id : missing_human) msg += " " + id;
            msg += ";";
        }
        if (!missing_metric.empty()) {
            msg += " no metric score for:";
            for (const auto& id : missing_metric) msg += " " + id;
        }
        throw DataError(msg);
    }
    return correlate_values(metric, human, opts);
}

double bleu2(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize_whitespace(candidate);
    const auto ref = tokenize_whitespace(reference);
    if (cand.empty() || ref.empty()) throw DataError("bleu2 requires non-empty texts");

    const auto [m1, t1] = modified_precision(cand, ref, 1);
    const auto [m2, t2] = modified_precision(cand, ref, 2);
    if (m1 == 0 || m2 == 0 || t2 == 0) return 0.0;

    const double p1 = static_cast<double>(m1) / static_cast<double>(t1);
    const double p2 = static_cast<double>(m2) / static_cast<double>(t2);
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
    return brevity * std::sqrt(p1 * p2);
}

Regression linear_regression(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2);
    if (is_constant(x)) throw DataError("regression slope undefined for constant x");

    const std::size_t n = x.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
    }
    Regression fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    return fit;
}

PlotData plot_data(std::span<const double> metric, std::span<const double> human,
                   std::uint64_t jitter_seed) {
    check_pair(metric, human, 2);
    PlotData data;
    data.human.assign(human.begin(), human.end());
    data.metric.assign(metric.begin(), metric.end());
    SplitMix64 rng = stream_for(jitter_seed, RngRole::kJitter);
    data.human_jittered.reserve(human.size());
    for (double h : human) data.human_jittered.push_back(h + 0.03 * rng.normal());
    data.regression = linear_regression(human, metric);
    return data;
}

std::string plot_data_csv(const PlotData& data) {
    std::ostringstream out;
    out << "human,metric,human_jittered\n";
    out.precision(17);
    for (std::size_t i = 0; i < data.human.size(); ++i) {
        out << data.human[i] << ',' << data.metric[i] << ',' << data.human_jittered[i] << '\n';
    }
    return out.str();
}

} // namespace paireval
