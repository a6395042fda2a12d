#include "paireval/http_judge.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"

namespace paireval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

} // namespace

ParsedEndpoint parse_endpoint(const std::string& url, ApiKind api) {
    ParsedEndpoint ep;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        ep.scheme = "https";
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        ep.scheme = "http";
        rest = url.substr(7);
    } else {
        throw DataError("endpoint must start with http:// or https://: " + url);
    }

    const std::size_t slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    ep.path = slash == std::string::npos ? std::string() : rest.substr(slash);

    const std::size_t colon = authority.rfind(':');
    if (colon != std::string::npos) {
        ep.host = authority.substr(0, colon);
        try {
            ep.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw DataError("invalid port in endpoint: " + url);
        }
    } else {
        ep.host = authority;
        ep.port = ep.scheme == "https" ? 443 : 80;
    }
    if (ep.host.empty()) throw DataError("endpoint has no host: " + url);

    if (ep.path.empty() || ep.path == "/") {
        ep.path = api == ApiKind::kChat ? "/v1/chat/completions" : "/v1/completions";
    }
    return ep;
}

std::map<std::string, double> parse_top_logprobs(const std::string& body, ApiKind api) {
    const json rec = json::parse(body, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
        throw BackendError("endpoint returned invalid JSON", body);
    if (!rec.contains("choices") || !rec["choices"].is_array() || rec["choices"].empty())
        throw BackendError("endpoint response has no choices", body);
    const json& choice = rec["choices"][0];
    if (!choice.contains("logprobs") || choice["logprobs"].is_null())
        throw BackendError("endpoint response lacks logprobs", body);
    const json& logprobs = choice["logprobs"];

    std::map<std::string, double> top;
    if (api == ApiKind::kCompletions) {
        // {"logprobs": {"top_logprobs": [{"A": -0.1, " B": -2.3}, ...]}}
        if (!logprobs.contains("top_logprobs") || !logprobs["top_logprobs"].is_array() ||
            logprobs["top_logprobs"].empty())
            throw BackendError("endpoint response lacks top_logprobs for the first token", body);
        const json& first = logprobs["top_logprobs"][0];
        if (!first.is_object())
            throw BackendError("first-token top_logprobs is not an object", body);
        for (const auto& [token, lp] : first.items()) {
            if (!lp.is_number())
                throw BackendError("non-numeric logprob for token '" + token + "'", body);
            top[token] = lp.get<double>();
        }
    } else {
        // {"logprobs": {"content": [{"token": ..., "top_logprobs": [{"token","logprob"}, ...]}]}}
        if (!logprobs.contains("content") || !logprobs["content"].is_array() ||
            logprobs["content"].empty())
            throw BackendError("chat response lacks logprobs content", body);
        const json& first = logprobs["content"][0];
        if (!first.contains("top_logprobs") || !first["top_logprobs"].is_array())
            throw BackendError("chat response lacks top_logprobs for the first token", body);
        for (const json& entry : first["top_logprobs"]) {
            if (!entry.is_object() || !entry.contains("token") || !entry.contains("logprob") ||
                !entry["token"].is_string() || !entry["logprob"].is_number())
                throw BackendError("malformed chat top_logprobs entry", body);
            // First occurrence wins if the server repeats a token.
            top.emplace(entry["token"].get<std::string>(), entry["logprob"].get<double>());
        }
    }
    if (top.empty()) throw BackendError("empty top_logprobs map", body);
    return top;
}

HttpJudge::HttpJudge(const JudgeConfig& cfg)
    : cfg_(cfg),
      endpoint_(parse_endpoint(cfg.endpoint, cfg.api)),
      api_key_(env_or_empty("PAIREVAL_API_KEY")),
      in_flight_(cfg.max_in_flight) {
    if (api_key_.empty()) api_key_ = env_or_empty("OPENAI_API_KEY");
}

std::string HttpJudge::decoding_params() const {
    return "temperature=0;max_tokens=1;logprobs=" + std::to_string(cfg_.logprob_top_k) +
           ";api=" + (cfg_.api == ApiKind::kChat ? "chat" : "completions");
}

std::string HttpJudge::post_with_retries(const std::string& body) {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    const std::string base = endpoint_.scheme + "://" + endpoint_.host + ":" +
                             std::to_string(endpoint_.port);
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(cfg_.retry_backoff * (1 << (attempt - 1)));
        }
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
            cfg_.request_timeout));
        client.set_read_timeout(cfg_.request_timeout);
        client.set_write_timeout(cfg_.request_timeout);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        if (cfg_.insecure_tls) client.enable_server_certificate_verification(false);
#endif
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto result = client.Post(endpoint_.path, headers, body, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 200 && result->status < 300) return result->body;
        if (retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        throw BackendError("endpoint rejected request with HTTP " +
                               std::to_string(result->status),
                           result->body);
    }
    throw BackendError("request failed after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts: " + last_error);
}

JudgeVerdict HttpJudge::verdict_for(const std::string& prompt, const std::string& label_a,
                                    const std::string& label_b, bool degenerate_is_error) {
    ordered_json request;
    request["model"] = cfg_.model;
    if (cfg_.api == ApiKind::kCompletions) {
        request["prompt"] = prompt;
        request["max_tokens"] = 1;
        request["temperature"] = 0;
        request["logprobs"] = cfg_.logprob_top_k;
    } else {
        request["messages"] = ordered_json::array({ordered_json{{"role", "user"}, {"content", prompt}}});
        request["max_tokens"] = 1;
        request["temperature"] = 0;
        request["logprobs"] = true;
        request["top_logprobs"] = cfg_.logprob_top_k;
    }

    const std::string body = post_with_retries(request.dump());
    const auto top = parse_top_logprobs(body, cfg_.api);

    const auto present = [&](const std::string& label) {
        return top.count(label) > 0 || top.count(" " + label) > 0;
    };
    if (degenerate_is_error && !present(label_a) && !present(label_b)) {
        throw BackendError("degenerate distribution: neither label '" + label_a + "' nor '" +
                               label_b + "' in top logprobs",
                           body);
    }

    const auto [p_a, p_b] = extract_label_probs(top, label_a, label_b, cfg_.epsilon_floor);
    JudgeVerdict verdict;
    verdict.raw_probs[label_a] = p_a;
    verdict.raw_probs[label_b] = p_b;
    verdict.p_first_better = p_a / (p_a + p_b);
    verdict.backend_id = id();
    return verdict;
}

JudgeVerdict HttpJudge::judge_pair(const PairQuery& query) {
    if (query.label_first == query.label_second)
        throw BackendError("label tokens must differ");
    return verdict_for(query.prompt, query.label_first, query.label_second,
                       /*degenerate_is_error=*/true);
}

JudgeVerdict HttpJudge::judge_direct(const DirectQuery& query) {
    return verdict_for(query.prompt, query.positive_label, query.negative_label,
                       /*degenerate_is_error=*/false);
}

} // namespace paireval
