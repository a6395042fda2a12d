#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "paireval/judge.hpp"

namespace paireval {

// Pieces of an endpoint URL. If the URL carries no path (or just "/"), the
// standard completions route is used.
struct ParsedEndpoint {
    std::string scheme; // "http" or "https"
    std::string host;
    int port = 0;       // 0 = scheme default
    std::string path;   // request path, always non-empty after parsing
};

ParsedEndpoint parse_endpoint(const std::string& url, ApiKind api);

// Queries an OpenAI-compatible inference server for the first generated
// token's top logprobs (temperature 0, max_tokens 1). Retries transport
// errors and 429/5xx with exponential backoff; a semaphore caps in-flight
// requests. API key read from PAIREVAL_API_KEY or OPENAI_API_KEY.
class HttpJudge final : public Judge {
  public:
    explicit HttpJudge(const JudgeConfig& cfg);

    std::string id() const override { return "http"; }
    JudgeVerdict judge_pair(const PairQuery& query) override;
    JudgeVerdict judge_direct(const DirectQuery& query) override;

    // The decoding parameters baked into every request, for cache keys.
    std::string decoding_params() const;

  private:
    // Returns the raw response body for a successful (2xx) request.
    std::string post_with_retries(const std::string& body);
    JudgeVerdict verdict_for(const std::string& prompt, const std::string& label_a,
                             const std::string& label_b, bool degenerate_is_error);

    JudgeConfig cfg_;
    ParsedEndpoint endpoint_;
    std::string api_key_;
    std::counting_semaphore<> in_flight_;
};

// Extracts the first generated token's top-logprobs map from a completions
// or chat response body. Throws BackendError (protocol) if absent.
std::map<std::string, double> parse_top_logprobs(const std::string& body, ApiKind api);

} // namespace paireval
