#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "paireval/core.hpp"
#include "paireval/scorer.hpp"
#include "paireval/stats.hpp"

namespace paireval {

enum class Coefficient { kPearson, kSpearman };
const char* to_string(Coefficient coefficient);
Coefficient coefficient_from_string(const std::string& s);

// Correlation of metric scores against human annotations for one dataset.
CorrelationReport correlate_reports(std::span<const ScoreReport> reports,
                                    std::span<const MetaEvalInstance> dataset,
                                    const CorrelationOptions& opts = {});

// Multi-run stability: one full scoring pass per seed, each with freshly
// sampled comparison examples; mu/sigma summarize the chosen coefficient
// (sigma = sample standard deviation, K-1 denominator).
struct StabilityReport {
    std::size_t runs = 0;
    std::vector<CorrelationReport> per_run;
    std::vector<std::uint64_t> seeds;
    double mu = 0.0;
    double sigma = 0.0;
    Coefficient coefficient = Coefficient::kSpearman;
};

struct ProtocolOptions {
    std::size_t n_comparisons = 3;
    PositionMode position = PositionMode::kBoth;
    int workers = 1;
};

StabilityReport stability(Judge& judge, const PromptTemplate& tpl,
                          std::span<const MetaEvalInstance> dataset,
                          std::span<const Dialogue> corpus, std::span<const std::uint64_t> run_seeds,
                          Coefficient coefficient, const ProtocolOptions& opts = {});

// Three correlation runs differing only in position mode, plus per-instance
// scores (dataset order) and the first-vs-second gaps.
struct PositionBiasReport {
    CorrelationReport first;
    CorrelationReport second;
    CorrelationReport both;
    std::vector<double> scores_first;
    std::vector<double> scores_second;
    std::vector<double> scores_both;
    double gap_pearson = 0.0;  // |first.r - second.r|
    double gap_spearman = 0.0; // |first.rho - second.rho|
};

PositionBiasReport position_bias_report(Judge& judge, const PromptTemplate& tpl,
                                        std::span<const MetaEvalInstance> dataset,
                                        const ComparisonSet& comparisons, int workers = 1);

// Accuracy of preferring the original over the corrupted response. PairEval
// mode: one swap-averaged head-to-head per instance, correct iff
// p(original) > 0.5. DirectEval mode: score the two responses independently,
// correct iff score(original) > score(corrupted). Ties are incorrect.
enum class RobustnessMode { kPairEval, kDirectEval };

struct RobustnessReport {
    struct AttackStats {
        std::size_t correct = 0;
        std::size_t total = 0;
        double accuracy = 0.0;
    };
    std::map<std::string, AttackStats> by_attack;
    AttackStats overall;
};

RobustnessReport robustness_eval(std::span<const RobustnessInstance> instances,
                                 RobustnessMode mode, Judge& judge,
                                 const PromptTemplate& pair_tpl,
                                 const PromptTemplate& direct_tpl, int workers = 1);

// Human-readable table: coefficients x100 at one decimal, values with
// p > 1e-5 marked with '*'.
std::string format_correlation_table(
    std::span<const std::pair<std::string, CorrelationReport>> rows);

// Machine-readable single-line JSON records.
std::string serialize_correlation(const CorrelationReport& report);
std::string serialize_stability(const StabilityReport& report);
std::string serialize_position_bias(const PositionBiasReport& report);
std::string serialize_robustness(const RobustnessReport& report);

} // namespace paireval
