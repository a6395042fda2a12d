#include "paireval/scorer.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"
#include "paireval/parallel.hpp"

namespace paireval {

using ordered_json = nlohmann::ordered_json;

namespace {

// Compensated (Kahan) mean over values already in deterministic order.
double stable_mean(const std::vector<ComparisonOutcome>& outcomes) {
    double sum = 0.0, compensation = 0.0;
    for (const auto& outcome : outcomes) {
        const double y = outcome.s - compensation;
        const double t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(outcomes.size());
}

void sort_by_comparison_id(std::vector<ComparisonOutcome>& outcomes) {
    std::sort(outcomes.begin(), outcomes.end(),
              [](const ComparisonOutcome& a, const ComparisonOutcome& b) {
                  return a.comparison_id < b.comparison_id;
              });
}

ScoreReport finalize_report(std::string target_id, std::vector<ComparisonOutcome> outcomes,
                            PositionMode mode) {
    ScoreReport report;
    report.target_id = std::move(target_id);
    sort_by_comparison_id(outcomes);
    report.per_comparison = std::move(outcomes);
    report.n_comparisons = report.per_comparison.size();
    report.position_mode = mode;
    report.score = stable_mean(report.per_comparison);
    return report;
}

} // namespace

const char* to_string(PositionMode mode) {
    switch (mode) {
    case PositionMode::kBoth: return "both";
    case PositionMode::kFirst: return "first";
    case PositionMode::kSecond: return "second";
    }
    return "unknown";
}

PositionMode position_mode_from_string(const std::string& s) {
    if (s == "both") return PositionMode::kBoth;
    if (s == "first") return PositionMode::kFirst;
    if (s == "second") return PositionMode::kSecond;
    throw DataError("unknown position mode: " + s);
}

double compare_once(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                    const Conversation& comparison, Position target_position) {
    PairQuery query;
    query.label_first = tpl.label_first;
    query.label_second = tpl.label_second;
    if (target_position == Position::kFirst) {
        query.prompt = render_pair_prompt(tpl, target, comparison);
        query.first = &target;
        query.second = &comparison;
    } else {
        query.prompt = render_pair_prompt(tpl, comparison, target);
        query.first = &comparison;
        query.second = &target;
    }
    try {
        const JudgeVerdict verdict = judge.judge_pair(query);
        return target_position == Position::kFirst ? verdict.p_first_better
                                                   : 1.0 - verdict.p_first_better;
    } catch (const BackendError& e) {
        throw BackendError("target '" + target.id + "' vs comparison '" + comparison.id +
                               "': " + e.what(),
                           e.payload());
    }
}

double swap_averaged_score(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                           const Conversation& comparison) {
    const double when_first = compare_once(judge, tpl, target, comparison, Position::kFirst);
    const double when_second = compare_once(judge, tpl, target, comparison, Position::kSecond);
    return (when_first + when_second) / 2.0;
}

ScoreReport paireval_score(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                           const ComparisonSet& comparisons, PositionMode mode) {
    if (comparisons.examples.empty()) throw DataError("comparison set is empty");

    std::vector<ComparisonOutcome> outcomes;
    outcomes.reserve(comparisons.examples.size());
    for (const Conversation& comp : comparisons.examples) {
        ComparisonOutcome outcome;
        outcome.comparison_id = comp.id;
        switch (mode) {
        case PositionMode::kBoth: {
            outcome.p_when_first = compare_once(judge, tpl, target, comp, Position::kFirst);
            outcome.p_when_second = compare_once(judge, tpl, target, comp, Position::kSecond);
            outcome.s = (*outcome.p_when_first + *outcome.p_when_second) / 2.0;
            break;
        }
        case PositionMode::kFirst:
            outcome.p_when_first = compare_once(judge, tpl, target, comp, Position::kFirst);
            outcome.s = *outcome.p_when_first;
            break;
        case PositionMode::kSecond:
            outcome.p_when_second = compare_once(judge, tpl, target, comp, Position::kSecond);
            outcome.s = *outcome.p_when_second;
            break;
        }
        outcomes.push_back(std::move(outcome));
    }
    return finalize_report(target.id, std::move(outcomes), mode);
}

std::vector<ScoreReport> paireval_exhaustive(Judge& judge, const PromptTemplate& tpl,
                                             std::span<const Conversation> targets, int workers) {
    const std::size_t m = targets.size();
    if (m < 2) throw DataError("exhaustive mode needs at least 2 targets");

    // p[i][j] = P(targets[i] better | i first, j second), one call per ordered pair.
    std::vector<std::vector<double>> p(m, std::vector<double>(m, 0.0));
    parallel_for(m, workers, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            p[i][j] = compare_once(judge, tpl, targets[i], targets[j], Position::kFirst);
        }
    });

    std::vector<ScoreReport> reports;
    reports.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<ComparisonOutcome> outcomes;
        outcomes.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            ComparisonOutcome outcome;
            outcome.comparison_id = targets[j].id;
            outcome.p_when_first = p[i][j];
            outcome.p_when_second = 1.0 - p[j][i]; // complement of the (j, i) call
            outcome.s = (*outcome.p_when_first + *outcome.p_when_second) / 2.0;
            outcomes.push_back(std::move(outcome));
        }
        reports.push_back(finalize_report(targets[i].id, std::move(outcomes), PositionMode::kBoth));
    }
    return reports;
}

ScoreReport directeval_score(Judge& judge, const PromptTemplate& direct_tpl,
                             const Conversation& target, bool normalize) {
    DirectQuery query;
    query.prompt = render_direct_prompt(direct_tpl, target);
    query.positive_label = direct_tpl.positive_label;
    query.negative_label = direct_tpl.negative_label;
    query.target = &target;

    JudgeVerdict verdict;
    try {
        verdict = judge.judge_direct(query);
    } catch (const BackendError& e) {
        throw BackendError("target '" + target.id + "': " + e.what(), e.payload());
    }

    const double positive = verdict.raw_probs.at(direct_tpl.positive_label);
    const double negative = verdict.raw_probs.at(direct_tpl.negative_label);
    const double score = normalize ? positive / (positive + negative) : positive;

    ScoreReport report;
    report.target_id = target.id;
    report.score = score;
    // Raw label masses ride along in the pf/ps slots of the single entry.
    ComparisonOutcome outcome;
    outcome.comparison_id = "direct";
    outcome.s = score;
    outcome.p_when_first = positive;
    outcome.p_when_second = negative;
    report.per_comparison.push_back(std::move(outcome));
    report.n_comparisons = 1;
    report.position_mode = PositionMode::kFirst;
    return report;
}

std::vector<ScoreReport> score_batch_paireval(Judge& judge, const PromptTemplate& tpl,
                                              std::span<const Conversation> targets,
                                              const ComparisonSet& comparisons,
                                              const BatchOptions& opts) {
    std::vector<ScoreReport> reports(targets.size());
    parallel_for(targets.size(), opts.workers, [&](std::size_t i) {
        reports[i] = paireval_score(judge, tpl, targets[i], comparisons, opts.position);
    });
    return reports;
}

std::vector<ScoreReport> score_batch_directeval(Judge& judge, const PromptTemplate& direct_tpl,
                                                std::span<const Conversation> targets,
                                                const BatchOptions& opts) {
    std::vector<ScoreReport> reports(targets.size());
    parallel_for(targets.size(), opts.workers, [&](std::size_t i) {
        reports[i] = directeval_score(judge, direct_tpl, targets[i], opts.normalize_direct);
    });
    return reports;
}

std::string serialize_report(const ScoreReport& report) {
    ordered_json line;
    line["id"] = report.target_id;
    line["score"] = report.score;
    line["n"] = report.n_comparisons;
    line["position_mode"] = to_string(report.position_mode);
    ordered_json per = ordered_json::array();
    for (const auto& outcome : report.per_comparison) {
        ordered_json entry;
        entry["cid"] = outcome.comparison_id;
        entry["s"] = outcome.s;
        entry["pf"] = outcome.p_when_first ? ordered_json(*outcome.p_when_first)
                                           : ordered_json(nullptr);
        entry["ps"] = outcome.p_when_second ? ordered_json(*outcome.p_when_second)
                                            : ordered_json(nullptr);
        per.push_back(std::move(entry));
    }
    line["per_comparison"] = std::move(per);
    return line.dump();
}

} // namespace paireval
