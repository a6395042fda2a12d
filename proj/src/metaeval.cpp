#include "paireval/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"
#include "paireval/parallel.hpp"
#include "paireval/sample.hpp"

namespace paireval {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<Conversation> conversations_of(std::span<const MetaEvalInstance> dataset) {
    std::vector<Conversation> out;
    out.reserve(dataset.size());
    for (const auto& instance : dataset) out.push_back(instance.conversation);
    return out;
}

std::vector<double> scores_of(std::span<const ScoreReport> reports) {
    std::vector<double> out;
    out.reserve(reports.size());
    for (const auto& report : reports) out.push_back(report.score);
    return out;
}

ordered_json correlation_json(const CorrelationReport& report) {
    ordered_json rec;
    rec["pearson_r"] = report.pearson_r;
    rec["spearman_rho"] = report.spearman_rho;
    rec["p_pearson"] = report.p_pearson;
    rec["p_spearman"] = report.p_spearman;
    rec["n"] = report.n;
    return rec;
}

} // namespace

const char* to_string(Coefficient coefficient) {
    return coefficient == Coefficient::kPearson ? "pearson" : "spearman";
}

Coefficient coefficient_from_string(const std::string& s) {
    if (s == "pearson") return Coefficient::kPearson;
    if (s == "spearman") return Coefficient::kSpearman;
    throw DataError("unknown coefficient: " + s);
}

CorrelationReport correlate_reports(std::span<const ScoreReport> reports,
                                    std::span<const MetaEvalInstance> dataset,
                                    const CorrelationOptions& opts) {
    std::vector<std::pair<std::string, double>> metric, human;
    metric.reserve(reports.size());
    human.reserve(dataset.size());
    for (const auto& report : reports) metric.emplace_back(report.target_id, report.score);
    for (const auto& instance : dataset)
        human.emplace_back(instance.conversation.id, instance.human_score);
    return correlate(metric, human, opts);
}

StabilityReport stability(Judge& judge, const PromptTemplate& tpl,
                          std::span<const MetaEvalInstance> dataset,
                          std::span<const Dialogue> corpus, std::span<const std::uint64_t> run_seeds,
                          Coefficient coefficient, const ProtocolOptions& opts) {
    if (run_seeds.size() < 2) throw DataError("stability needs at least 2 runs");

    const auto targets = conversations_of(dataset);
    StabilityReport report;
    report.runs = run_seeds.size();
    report.seeds.assign(run_seeds.begin(), run_seeds.end());
    report.coefficient = coefficient;

    BatchOptions batch;
    batch.position = opts.position;
    batch.workers = opts.workers;
    for (const std::uint64_t seed : run_seeds) {
        const ComparisonSet comparisons =
            sample_comparisons_from_corpus(corpus, opts.n_comparisons, seed);
        const auto scores = score_batch_paireval(judge, tpl, targets, comparisons, batch);
        report.per_run.push_back(correlate_reports(scores, dataset));
    }

    double sum = 0.0;
    for (const auto& run : report.per_run) {
        sum += coefficient == Coefficient::kPearson ? run.pearson_r : run.spearman_rho;
    }
    report.mu = sum / static_cast<double>(report.runs);
    double ss = 0.0;
    for (const auto& run : report.per_run) {
        const double value =
            coefficient == Coefficient::kPearson ? run.pearson_r : run.spearman_rho;
        ss += (value - report.mu) * (value - report.mu);
    }
    report.sigma = std::sqrt(ss / static_cast<double>(report.runs - 1));
    return report;
}

PositionBiasReport position_bias_report(Judge& judge, const PromptTemplate& tpl,
                                        std::span<const MetaEvalInstance> dataset,
                                        const ComparisonSet& comparisons, int workers) {
    const auto targets = conversations_of(dataset);

    PositionBiasReport report;
    BatchOptions batch;
    batch.workers = workers;

    batch.position = PositionMode::kFirst;
    const auto first = score_batch_paireval(judge, tpl, targets, comparisons, batch);
    batch.position = PositionMode::kSecond;
    const auto second = score_batch_paireval(judge, tpl, targets, comparisons, batch);
    batch.position = PositionMode::kBoth;
    const auto both = score_batch_paireval(judge, tpl, targets, comparisons, batch);

    report.scores_first = scores_of(first);
    report.scores_second = scores_of(second);
    report.scores_both = scores_of(both);
    report.first = correlate_reports(first, dataset);
    report.second = correlate_reports(second, dataset);
    report.both = correlate_reports(both, dataset);
    report.gap_pearson = std::fabs(report.first.pearson_r - report.second.pearson_r);
    report.gap_spearman = std::fabs(report.first.spearman_rho - report.second.spearman_rho);
    return report;
}

RobustnessReport robustness_eval(std::span<const RobustnessInstance> instances,
                                 RobustnessMode mode, Judge& judge,
                                 const PromptTemplate& pair_tpl,
                                 const PromptTemplate& direct_tpl, int workers) {
    if (instances.empty()) throw DataError("robustness evaluation needs at least one instance");

    // Judge concurrently, reduce single-threaded in input order.
    std::vector<char> outcomes(instances.size(), 0);
    parallel_for(instances.size(), workers, [&](std::size_t i) {
        const auto& instance = instances[i];
        if (instance.original_response == instance.corrupted_response)
            throw DataError("instance '" + instance.id +
                            "': original and corrupted responses are equal");

        const Conversation original{instance.id + "-original", instance.history,
                                    instance.original_response};
        const Conversation corrupted{instance.id + "-corrupted", instance.history,
                                     instance.corrupted_response};

        bool correct = false;
        if (mode == RobustnessMode::kPairEval) {
            const double p_original = swap_averaged_score(judge, pair_tpl, original, corrupted);
            correct = p_original > 0.5;
        } else {
            const double score_original = directeval_score(judge, direct_tpl, original).score;
            const double score_corrupted = directeval_score(judge, direct_tpl, corrupted).score;
            correct = score_original > score_corrupted;
        }
        outcomes[i] = correct ? 1 : 0;
    });

    RobustnessReport report;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        auto& attack = report.by_attack[instances[i].attack_type];
        attack.total += 1;
        report.overall.total += 1;
        if (outcomes[i]) {
            attack.correct += 1;
            report.overall.correct += 1;
        }
    }
    for (auto& [attack_type, attack] : report.by_attack) {
        attack.accuracy = static_cast<double>(attack.correct) / static_cast<double>(attack.total);
    }
    report.overall.accuracy =
        static_cast<double>(report.overall.correct) / static_cast<double>(report.overall.total);
    return report;
}

std::string format_correlation_table(
    std::span<const std::pair<std::string, CorrelationReport>> rows) {
    std::size_t label_width = 7;
    for (const auto& [label, report] : rows) label_width = std::max(label_width, label.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_width + 2)) << "dataset"
        << std::right << std::setw(8) << "r" << std::setw(8) << "rho" << std::setw(8) << "n"
        << '\n';
    const auto cell = [](double value, double p) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(1) << value * 100.0;
        if (p > 1e-5) s << '*';
        return s.str();
    };
    for (const auto& [label, report] : rows) {
        out << std::left << std::setw(static_cast<int>(label_width + 2)) << label << std::right
            << std::setw(8) << cell(report.pearson_r, report.p_pearson) << std::setw(8)
            << cell(report.spearman_rho, report.p_spearman) << std::setw(8) << report.n << '\n';
    }
    return out.str();
}

std::string serialize_correlation(const CorrelationReport& report) {
    return correlation_json(report).dump();
}

std::string serialize_stability(const StabilityReport& report) {
    ordered_json rec;
    rec["runs"] = report.runs;
    rec["coefficient"] = to_string(report.coefficient);
    rec["mu"] = report.mu;
    rec["sigma"] = report.sigma;
    ordered_json per = ordered_json::array();
    for (std::size_t i = 0; i < report.per_run.size(); ++i) {
        ordered_json entry = correlation_json(report.per_run[i]);
        entry["seed"] = report.seeds[i];
        per.push_back(std::move(entry));
    }
    rec["per_run"] = std::move(per);
    return rec.dump();
}

std::string serialize_position_bias(const PositionBiasReport& report) {
    ordered_json rec;
    rec["first"] = correlation_json(report.first);
    rec["second"] = correlation_json(report.second);
    rec["both"] = correlation_json(report.both);
    rec["gap_pearson"] = report.gap_pearson;
    rec["gap_spearman"] = report.gap_spearman;
    return rec.dump();
}

std::string serialize_robustness(const RobustnessReport& report) {
    ordered_json rec;
    ordered_json attacks = ordered_json::object();
    for (const auto& [attack_type, attack] : report.by_attack) {
        attacks[attack_type] = {{"correct", attack.correct},
                                {"total", attack.total},
                                {"accuracy", attack.accuracy}};
    }
    rec["by_attack"] = std::move(attacks);
    rec["overall"] = {{"correct", report.overall.correct},
                      {"total", report.overall.total},
                      {"accuracy", report.overall.accuracy}};
    return rec.dump();
}

} // namespace paireval
