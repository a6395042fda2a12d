#include "paireval/judge.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "paireval/errors.hpp"

namespace paireval {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Byte-level, locale-independent: ASCII alphanumerics (lowercased) and all
// bytes >= 0x80 are token characters, everything else separates. UTF-8
// sequences pass through intact.
std::unordered_set<std::string> token_set(const std::string& text) {
    std::unordered_set<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        const bool ascii_alnum =
            (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (c >= 0x80) {
            current += static_cast<char>(c);
        } else if (ascii_alnum) {
            current += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        } else if (!current.empty()) {
            tokens.insert(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.insert(std::move(current));
    return tokens;
}

} // namespace

void validate(const JudgeConfig& cfg) {
    if (!(cfg.epsilon_floor > 0.0 && cfg.epsilon_floor <= 1e-2))
        throw DataError("epsilon_floor must lie in (0, 1e-2]");
    if (!(cfg.mock_sharpness > 0.0)) throw DataError("mock_sharpness must be > 0");
    if (cfg.logprob_top_k < 2) throw DataError("logprob_top_k must be >= 2");
    if (cfg.max_retries < 0) throw DataError("max_retries must be >= 0");
    if (cfg.max_in_flight < 1) throw DataError("max_in_flight must be >= 1");
    if (cfg.backend == BackendKind::kHttp && cfg.endpoint.empty())
        throw DataError("http backend requires an endpoint");
}

std::pair<double, double> extract_label_probs(const std::map<std::string, double>& token_logprobs,
                                              const std::string& label_first,
                                              const std::string& label_second,
                                              double epsilon_floor) {
    const auto mass_for = [&](const std::string& label) {
        double mass = 0.0;
        bool present = false;
        for (const std::string& variant : {label, " " + label}) {
            const auto it = token_logprobs.find(variant);
            if (it == token_logprobs.end()) continue;
            present = true;
            mass += std::min(std::exp(it->second), 1.0);
        }
        if (!present) return epsilon_floor;
        return std::min(std::max(mass, epsilon_floor), 1.0);
    };
    return {mass_for(label_first), mass_for(label_second)};
}

double mock_relevance(const Conversation& conv) {
    std::string history_text;
    for (const auto& utt : conv.history) {
        history_text += utt.text;
        history_text += ' ';
    }
    const auto history_tokens = token_set(history_text);
    const auto response_tokens = token_set(conv.response);
    if (history_tokens.empty() || response_tokens.empty()) return 0.0;

    std::size_t intersection = 0;
    for (const auto& tok : response_tokens) {
        if (history_tokens.count(tok)) ++intersection;
    }
    const std::size_t union_size = history_tokens.size() + response_tokens.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(union_size);
}

JudgeVerdict MockJudge::judge_pair(const PairQuery& query) {
    if (query.first == nullptr || query.second == nullptr)
        throw BackendError("mock backend requires structured conversations in the query");
    if (query.label_first == query.label_second)
        throw BackendError("label tokens must differ");

    const double diff = mock_relevance(*query.first) - mock_relevance(*query.second);
    // Evaluate the logistic once on -|z| and derive both sides from it, so a
    // swapped query yields exactly the complementary probability. The losing
    // side is clamped to the floor first; clamping both sides symmetrically
    // keeps p(a,b) + p(b,a) == 1 bit-exact.
    const double losing =
        std::max(logistic(-std::fabs(diff) * cfg_.mock_sharpness), cfg_.epsilon_floor);
    const double p_first = diff >= 0.0 ? 1.0 - losing : losing;

    JudgeVerdict verdict;
    verdict.p_first_better = p_first;
    verdict.raw_probs[query.label_first] = p_first;
    verdict.raw_probs[query.label_second] = 1.0 - p_first;
    verdict.backend_id = id();
    return verdict;
}

JudgeVerdict MockJudge::judge_direct(const DirectQuery& query) {
    if (query.target == nullptr)
        throw BackendError("mock backend requires a structured conversation in the query");

    const double rel = mock_relevance(*query.target);
    JudgeVerdict verdict;
    verdict.raw_probs[query.positive_label] = std::max(rel, cfg_.epsilon_floor);
    verdict.raw_probs[query.negative_label] = std::max(1.0 - rel, cfg_.epsilon_floor);
    const double pos = verdict.raw_probs[query.positive_label];
    const double neg = verdict.raw_probs[query.negative_label];
    verdict.p_first_better = pos / (pos + neg);
    verdict.backend_id = id();
    return verdict;
}

} // namespace paireval
