#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paireval/core.hpp"
#include "paireval/judge.hpp"
#include "paireval/prompt.hpp"

namespace paireval {

enum class PositionMode { kBoth, kFirst, kSecond };
enum class Position { kFirst, kSecond };

const char* to_string(PositionMode mode);
PositionMode position_mode_from_string(const std::string& s);

// Per-opponent outcome. In mode both, s = (p_when_first + p_when_second)/2;
// in single-position modes only the played slot is populated.
struct ComparisonOutcome {
    std::string comparison_id;
    double s = 0.0;
    std::optional<double> p_when_first;
    std::optional<double> p_when_second;
};

struct ScoreReport {
    std::string target_id;
    double score = 0.0;                       // mean of per_comparison s values
    std::vector<ComparisonOutcome> per_comparison; // sorted by comparison_id
    PositionMode position_mode = PositionMode::kBoth;
    std::size_t n_comparisons = 0;
};

// Probability mass the judge assigns to the target when it sits in the given
// slot of the pair prompt.
double compare_once(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                    const Conversation& comparison, Position target_position);

// Mean of both orders; exactly two judge calls on a cold cache.
double swap_averaged_score(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                           const Conversation& comparison);

ScoreReport paireval_score(Judge& judge, const PromptTemplate& tpl, const Conversation& target,
                           const ComparisonSet& comparisons,
                           PositionMode mode = PositionMode::kBoth);

// Every ordered pair (i, j), i != j, gets exactly one judge call; each call
// feeds both endpoints' aggregations via the complement, so the total is
// M(M-1) instead of 2*M*(M-1). Reports come back in input order.
std::vector<ScoreReport> paireval_exhaustive(Judge& judge, const PromptTemplate& tpl,
                                             std::span<const Conversation> targets,
                                             int workers = 1);

// One judge call; the score is the positive label's raw (unnormalized)
// probability mass unless `normalize` divides it by the two-label total.
ScoreReport directeval_score(Judge& judge, const PromptTemplate& direct_tpl,
                             const Conversation& target, bool normalize = false);

// Batch front door used by the CLI and protocols. Targets are scored
// independently (concurrently when workers > 1) and reports always come back
// in input order; any failure aborts the whole batch.
struct BatchOptions {
    PositionMode position = PositionMode::kBoth;
    bool normalize_direct = false;
    int workers = 1;
};

std::vector<ScoreReport> score_batch_paireval(Judge& judge, const PromptTemplate& tpl,
                                              std::span<const Conversation> targets,
                                              const ComparisonSet& comparisons,
                                              const BatchOptions& opts = {});

std::vector<ScoreReport> score_batch_directeval(Judge& judge, const PromptTemplate& direct_tpl,
                                                std::span<const Conversation> targets,
                                                const BatchOptions& opts = {});

// One canonical report line:
// {"id":..,"score":..,"n":..,"position_mode":..,"per_comparison":[{"cid","s","pf","ps"},..]}
std::string serialize_report(const ScoreReport& report);

} // namespace paireval
