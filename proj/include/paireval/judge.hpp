#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "paireval/core.hpp"

namespace paireval {

// A judge backend's answer for one prompt: the probability that the
// first-labelled response is better, normalized over the two label words.
// raw_probs keeps the unnormalized (variant-summed, floored) label masses.
struct JudgeVerdict {
    double p_first_better = 0.5;
    std::map<std::string, double> raw_probs;
    std::string backend_id;
    bool cached = false;
};

enum class BackendKind { kMock, kHttp };
enum class ApiKind { kCompletions, kChat };

struct JudgeConfig {
    BackendKind backend = BackendKind::kMock;
    std::string endpoint;            // http only
    std::string model;               // http only
    ApiKind api = ApiKind::kCompletions;
    double epsilon_floor = 1e-6;     // in (0, 1e-2]
    double mock_sharpness = 10.0;    // logistic slope of the mock judge
    int logprob_top_k = 5;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{250}; // doubled per attempt
    int max_in_flight = 4;
    bool insecure_tls = false;
};

void validate(const JudgeConfig& cfg);

// One pairwise judgement request. `first`/`second` carry the structured
// conversations for backends that work offline (the mock); HTTP backends
// only read the rendered prompt and labels.
struct PairQuery {
    std::string prompt;
    std::string label_first;
    std::string label_second;
    const Conversation* first = nullptr;
    const Conversation* second = nullptr;
};

// One direct-evaluation request; the positive label's raw probability is the
// score, so no normalization is applied by callers.
struct DirectQuery {
    std::string prompt;
    std::string positive_label;
    std::string negative_label;
    const Conversation* target = nullptr;
};

class Judge {
  public:
    virtual ~Judge() = default;
    virtual std::string id() const = 0;
    // Thread-safe. Throws BackendError on failure; never returns partial data.
    virtual JudgeVerdict judge_pair(const PairQuery& query) = 0;
    virtual JudgeVerdict judge_direct(const DirectQuery& query) = 0;
};

// exp() of each label's logprob, summing the accepted token variants (exact
// label and single-leading-space variant). Missing label -> epsilon_floor.
// Result is NOT normalized; values clamped into (0, 1].
std::pair<double, double> extract_label_probs(const std::map<std::string, double>& token_logprobs,
                                              const std::string& label_first,
                                              const std::string& label_second,
                                              double epsilon_floor);

// Jaccard similarity between the response's token set and the concatenated
// history's token set. Tokenization: lowercase, split on every non-alphanumeric
// codepoint, drop empties (bytes >= 0x80 count as token characters, so UTF-8
// text survives intact). Either side empty -> 0.
double mock_relevance(const Conversation& conv);

// Deterministic offline judge:
//   p_first_better = logistic(sharpness * (rel(first) - rel(second))).
// Exactly order-antisymmetric: swapping the conversations maps p to 1 - p.
class MockJudge final : public Judge {
  public:
    explicit MockJudge(const JudgeConfig& cfg) : cfg_(cfg) {}

    std::string id() const override { return "mock"; }
    JudgeVerdict judge_pair(const PairQuery& query) override;
    JudgeVerdict judge_direct(const DirectQuery& query) override;

  private:
    JudgeConfig cfg_;
};

// Counts logical judge invocations (above any cache). Used by manifests,
// call-accounting tests, and the acceptance suite.
class CountingJudge final : public Judge {
  public:
    explicit CountingJudge(std::shared_ptr<Judge> inner) : inner_(std::move(inner)) {}

    std::string id() const override { return inner_->id(); }
    JudgeVerdict judge_pair(const PairQuery& query) override {
        pair_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->judge_pair(query);
    }
    JudgeVerdict judge_direct(const DirectQuery& query) override {
        direct_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->judge_direct(query);
    }

    std::uint64_t pair_calls() const { return pair_calls_.load(); }
    std::uint64_t direct_calls() const { return direct_calls_.load(); }
    std::uint64_t total_calls() const { return pair_calls() + direct_calls(); }

  private:
    std::shared_ptr<Judge> inner_;
    std::atomic<std::uint64_t> pair_calls_{0};
    std::atomic<std::uint64_t> direct_calls_{0};
};

} // namespace paireval
