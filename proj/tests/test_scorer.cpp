#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"
#include "paireval/scorer.hpp"
#include "test_support.hpp"

using namespace paireval;
using test_support::make_conversation;

namespace {

JudgeConfig mock_config() { return JudgeConfig{}; }

// Returns scripted p_first_better values call by call.
class SequenceJudge final : public Judge {
  public:
    explicit SequenceJudge(std::vector<double> values) : values_(std::move(values)) {}

    std::string id() const override { return "sequence"; }

    JudgeVerdict judge_pair(const PairQuery& query) override {
        REQUIRE(next_ < values_.size());
        const double p = values_[next_++];
        JudgeVerdict verdict;
        verdict.p_first_better = p;
        verdict.raw_probs[query.label_first] = p;
        verdict.raw_probs[query.label_second] = 1.0 - p;
        verdict.backend_id = id();
        return verdict;
    }

    JudgeVerdict judge_direct(const DirectQuery& query) override {
        REQUIRE(next_ < values_.size());
        const double p = values_[next_++];
        JudgeVerdict verdict;
        verdict.p_first_better = p;
        verdict.raw_probs[query.positive_label] = p;
        verdict.raw_probs[query.negative_label] = 1.0 - p;
        verdict.backend_id = id();
        return verdict;
    }

  private:
    std::vector<double> values_;
    std::size_t next_ = 0;
};

Conversation strong_target() { return make_conversation("target", "aa bb cc", "aa bb cc"); } // rel 1
Conversation weak_comp() { return make_conversation("comp", "aa bb cc", "bb cc dd"); }       // rel 0.5

constexpr double kLogistic5 = 0.9933071490757152; // frozen: 1/(1+e^-5)

} // namespace

TEST_CASE("compare_once: identical conversations give 0.5 in either slot") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();
    const auto conv = make_conversation("c", "same text", "same text");
    CHECK(compare_once(judge, tpl, conv, conv, Position::kFirst) == 0.5);
    CHECK(compare_once(judge, tpl, conv, conv, Position::kSecond) == 0.5);
}

TEST_CASE("compare_once: relevance 1.0 vs 0.5 at sharpness 10 gives logistic(5)") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();
    const double when_first =
        compare_once(judge, tpl, strong_target(), weak_comp(), Position::kFirst);
    CHECK(when_first == doctest::Approx(kLogistic5).epsilon(1e-12));

    // Slot bookkeeping: the target is still favored when it sits second.
    const double when_second =
        compare_once(judge, tpl, strong_target(), weak_comp(), Position::kSecond);
    CHECK(when_second == doctest::Approx(kLogistic5).epsilon(1e-12));
    CHECK(when_first == when_second); // bit-identical under the antisymmetric mock
}

TEST_CASE("swap_averaged_score under the mock equals the single-order value") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();

    const auto conv = make_conversation("c", "alpha beta", "alpha beta");
    CHECK(swap_averaged_score(judge, tpl, conv, conv) == 0.5);

    test_support::ConversationGenerator gen(0x1234, /*gnarly=*/false);
    for (std::size_t i = 0; i < 100; ++i) {
        const Conversation a = gen.next(2 * i);
        const Conversation b = gen.next(2 * i + 1);
        const double averaged = swap_averaged_score(judge, tpl, a, b);
        const double single = compare_once(judge, tpl, a, b, Position::kFirst);
        REQUIRE(std::fabs(averaged - single) <= 1e-12);
    }
}

TEST_CASE("swap_averaged_score averages a position-sensitive judge") {
    // 0.8 with the target first; 0.6 for the target when it sits second
    // (the second call reports p_first_better = 0.4 for the comparison).
    SequenceJudge judge({0.8, 0.4});
    const PromptTemplate tpl = default_pairwise_template();
    const double s = swap_averaged_score(judge, tpl, strong_target(), weak_comp());
    CHECK(s == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("swap_averaged_score issues exactly two judge calls") {
    auto inner = std::make_shared<MockJudge>(mock_config());
    CountingJudge counting(inner);
    swap_averaged_score(counting, default_pairwise_template(), strong_target(), weak_comp());
    CHECK(counting.pair_calls() == 2);
}

TEST_CASE("paireval_score: mean of {0.2, 0.5, 0.8} is 0.5") {
    // Scripted so the swap-averaged s values per comparison are 0.2, 0.5, 0.8.
    SequenceJudge judge({0.2, 0.8, 0.5, 0.5, 0.8, 0.2});
    const PromptTemplate tpl = default_pairwise_template();
    ComparisonSet comps;
    comps.examples = {make_conversation("c1", "h1", "r1"), make_conversation("c2", "h2", "r2"),
                      make_conversation("c3", "h3", "r3")};

    const ScoreReport report =
        paireval_score(judge, tpl, make_conversation("t", "h", "r"), comps);
    REQUIRE(report.per_comparison.size() == 3);
    CHECK(report.per_comparison[0].s == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(report.per_comparison[1].s == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.per_comparison[2].s == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(report.score == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.n_comparisons == 3);
}

TEST_CASE("paireval_score: N = 1 degenerates to the single comparison value") {
    MockJudge judge(mock_config());
    ComparisonSet comps;
    comps.examples = {weak_comp()};
    const ScoreReport report =
        paireval_score(judge, default_pairwise_template(), strong_target(), comps);
    CHECK(report.score == report.per_comparison[0].s);
    CHECK(report.n_comparisons == 1);
}

TEST_CASE("paireval_score: both-mode invariant s = (pf + ps) / 2") {
    MockJudge judge(mock_config());
    ComparisonSet comps;
    comps.examples = {weak_comp(), make_conversation("c9", "zz yy", "xx ww")};
    const ScoreReport report =
        paireval_score(judge, default_pairwise_template(), strong_target(), comps);
    for (const auto& outcome : report.per_comparison) {
        REQUIRE(outcome.p_when_first.has_value());
        REQUIRE(outcome.p_when_second.has_value());
        REQUIRE(std::fabs(outcome.s - (*outcome.p_when_first + *outcome.p_when_second) / 2.0) <=
                1e-12);
    }
}

TEST_CASE("call accounting: 2N in both mode, N in single-position modes") {
    ComparisonSet comps;
    comps.examples = {make_conversation("c1", "h1 x", "r1 y"),
                      make_conversation("c2", "h2 x", "r2 y"),
                      make_conversation("c3", "h3 x", "r3 y")};
    const auto target = strong_target();

    for (const auto [mode, expected] :
         {std::pair{PositionMode::kBoth, std::uint64_t{6}},
          std::pair{PositionMode::kFirst, std::uint64_t{3}},
          std::pair{PositionMode::kSecond, std::uint64_t{3}}}) {
        CountingJudge counting(std::make_shared<MockJudge>(mock_config()));
        paireval_score(counting, default_pairwise_template(), target, comps, mode);
        REQUIRE(counting.pair_calls() == expected);
    }
}

TEST_CASE("permuting the comparison set never changes the serialized report") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();
    ComparisonSet comps;
    test_support::ConversationGenerator gen(0x77, /*gnarly=*/false);
    for (std::size_t i = 0; i < 6; ++i) comps.examples.push_back(gen.next(i));

    const std::string baseline =
        serialize_report(paireval_score(judge, tpl, strong_target(), comps));
    for (int round = 0; round < 5; ++round) {
        std::rotate(comps.examples.begin(), comps.examples.begin() + 1, comps.examples.end());
        std::swap(comps.examples[0], comps.examples[2]);
        CHECK(serialize_report(paireval_score(judge, tpl, strong_target(), comps)) == baseline);
    }
}

TEST_CASE("exhaustive mode: M = 2 issues 2 calls and scores sum to 1") {
    CountingJudge counting(std::make_shared<MockJudge>(mock_config()));
    const std::vector<Conversation> targets{strong_target(), weak_comp()};
    const auto reports = paireval_exhaustive(counting, default_pairwise_template(), targets);
    CHECK(counting.pair_calls() == 2);
    REQUIRE(reports.size() == 2);
    CHECK(std::fabs(reports[0].score + reports[1].score - 1.0) <= 1e-12);
}

TEST_CASE("exhaustive mode: M = 4 issues M(M-1) = 12 calls") {
    CountingJudge counting(std::make_shared<MockJudge>(mock_config()));
    std::vector<Conversation> targets;
    test_support::ConversationGenerator gen(0x99, /*gnarly=*/false);
    for (std::size_t i = 0; i < 4; ++i) targets.push_back(gen.next(i));
    const auto reports = paireval_exhaustive(counting, default_pairwise_template(), targets);
    CHECK(counting.pair_calls() == 12);
    CHECK(reports.size() == 4);
}

TEST_CASE("exhaustive scores match a brute-force aggregation of direct mock calls") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();

    // Strictly ordered relevances: response shares k of 6 history tokens.
    std::vector<Conversation> targets;
    const std::string history = "w0 w1 w2 w3 w4 w5";
    const char* responses[] = {"w0 q1 q2 q3 q4 q5", "w0 w1 q2 q3 q4 q5", "w0 w1 w2 q3 q4 q5",
                               "w0 w1 w2 w3 q4 q5", "w0 w1 w2 w3 w4 q5", "w0 w1 w2 w3 w4 w5"};
    for (int i = 0; i < 6; ++i)
        targets.push_back(make_conversation("t" + std::to_string(i), history, responses[i]));

    const auto reports = paireval_exhaustive(judge, tpl, targets);

    // Independent route: aggregate per the definition, one judge call per
    // ordered pair, complement for the second slot.
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            if (i == j) continue;
            const double p_ij = compare_once(judge, tpl, targets[i], targets[j], Position::kFirst);
            const double p_ji = compare_once(judge, tpl, targets[j], targets[i], Position::kFirst);
            total += (p_ij + (1.0 - p_ji)) / 2.0;
        }
        const double expected = total / static_cast<double>(targets.size() - 1);
        REQUIRE(reports[i].score == doctest::Approx(expected).epsilon(1e-12));
    }

    // Strictly increasing relevance must give strictly increasing scores.
    for (std::size_t i = 1; i < reports.size(); ++i)
        REQUIRE(reports[i].score > reports[i - 1].score);
}

TEST_CASE("directeval: score is the raw positive mass") {
    SequenceJudge judge({0.7});
    const auto report =
        directeval_score(judge, default_direct_template(), strong_target(), /*normalize=*/false);
    CHECK(report.score == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(report.n_comparisons == 1);
}

TEST_CASE("directeval with normalize divides by the two-label mass") {
    // Raw masses 0.7 and 0.2.
    class TwoMassJudge final : public Judge {
      public:
        std::string id() const override { return "twomass"; }
        JudgeVerdict judge_pair(const PairQuery&) override { throw BackendError("unused"); }
        JudgeVerdict judge_direct(const DirectQuery& query) override {
            JudgeVerdict verdict;
            verdict.raw_probs[query.positive_label] = 0.7;
            verdict.raw_probs[query.negative_label] = 0.2;
            verdict.p_first_better = 0.7 / 0.9;
            verdict.backend_id = id();
            return verdict;
        }
    } judge;
    const auto raw =
        directeval_score(judge, default_direct_template(), strong_target(), /*normalize=*/false);
    CHECK(raw.score == doctest::Approx(0.7).epsilon(1e-15));
    const auto normalized =
        directeval_score(judge, default_direct_template(), strong_target(), /*normalize=*/true);
    CHECK(normalized.score == doctest::Approx(0.7 / 0.9).epsilon(1e-12));
}

TEST_CASE("directeval under the mock scores by relevance") {
    MockJudge judge(mock_config());
    const auto report = directeval_score(judge, default_direct_template(), weak_comp());
    CHECK(report.score == doctest::Approx(0.5).epsilon(1e-15)); // Jaccard 2/4
}

TEST_CASE("mean-vs-sum rank equivalence for fixed N") {
    SplitMix64 rng(0x5ca1e);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t targets = 8, n = 5;
        std::vector<double> mean_scores(targets), sum_scores(targets);
        for (std::size_t t = 0; t < targets; ++t) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += rng.uniform();
            sum_scores[t] = sum;
            mean_scores[t] = sum / static_cast<double>(n);
        }
        std::vector<std::size_t> by_mean(targets), by_sum(targets);
        std::iota(by_mean.begin(), by_mean.end(), 0);
        by_sum = by_mean;
        std::sort(by_mean.begin(), by_mean.end(),
                  [&](std::size_t a, std::size_t b) { return mean_scores[a] < mean_scores[b]; });
        std::sort(by_sum.begin(), by_sum.end(),
                  [&](std::size_t a, std::size_t b) { return sum_scores[a] < sum_scores[b]; });
        REQUIRE(by_mean == by_sum);
    }
}

TEST_CASE("every emitted score stays in [0, 1]") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();
    test_support::ConversationGenerator gen(0xd00d, /*gnarly=*/false);
    ComparisonSet comps;
    for (std::size_t i = 0; i < 4; ++i) comps.examples.push_back(gen.next(i));
    for (std::size_t i = 4; i < 40; ++i) {
        const auto report = paireval_score(judge, tpl, gen.next(i), comps);
        REQUIRE(report.score >= 0.0);
        REQUIRE(report.score <= 1.0);
        for (const auto& outcome : report.per_comparison) {
            REQUIRE(outcome.s >= 0.0);
            REQUIRE(outcome.s <= 1.0);
        }
    }
}

TEST_CASE("batch scoring is order-stable and worker-count independent") {
    MockJudge judge(mock_config());
    const PromptTemplate tpl = default_pairwise_template();
    test_support::ConversationGenerator gen(0xcafe, /*gnarly=*/false);
    std::vector<Conversation> targets;
    for (std::size_t i = 0; i < 20; ++i) targets.push_back(gen.next(i));
    ComparisonSet comps;
    for (std::size_t i = 20; i < 23; ++i) comps.examples.push_back(gen.next(i));

    BatchOptions sequential;
    const auto base = score_batch_paireval(judge, tpl, targets, comps, sequential);
    BatchOptions parallel;
    parallel.workers = 4;
    const auto threaded = score_batch_paireval(judge, tpl, targets, comps, parallel);
    REQUIRE(base.size() == threaded.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        REQUIRE(base[i].target_id == targets[i].id);
        REQUIRE(serialize_report(base[i]) == serialize_report(threaded[i]));
    }
}

TEST_CASE("single-position reports serialize null for the unplayed slot") {
    MockJudge judge(mock_config());
    ComparisonSet comps;
    comps.examples = {weak_comp()};
    const auto report = paireval_score(judge, default_pairwise_template(), strong_target(), comps,
                                       PositionMode::kFirst);
    const auto line = nlohmann::json::parse(serialize_report(report));
    CHECK(line["position_mode"] == "first");
    CHECK(line["per_comparison"][0]["pf"].is_number());
    CHECK(line["per_comparison"][0]["ps"].is_null());
}

TEST_CASE("empty comparison set and undersized exhaustive input are errors") {
    MockJudge judge(mock_config());
    ComparisonSet empty;
    CHECK_THROWS_AS(
        paireval_score(judge, default_pairwise_template(), strong_target(), empty),
        DataError);
    const std::vector<Conversation> one{strong_target()};
    CHECK_THROWS_AS(paireval_exhaustive(judge, default_pairwise_template(), one), DataError);
}

TEST_CASE("judge failures abort the target with ids attached") {
    class FailingJudge final : public Judge {
      public:
        std::string id() const override { return "failing"; }
        JudgeVerdict judge_pair(const PairQuery&) override {
            throw BackendError("boom", "payload");
        }
        JudgeVerdict judge_direct(const DirectQuery&) override { throw BackendError("boom"); }
    } judge;
    ComparisonSet comps;
    comps.examples = {weak_comp()};
    CHECK_THROWS_WITH_AS(
        paireval_score(judge, default_pairwise_template(), strong_target(), comps),
        doctest::Contains("target"), BackendError);
}
