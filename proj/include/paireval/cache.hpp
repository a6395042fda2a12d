#pragma once

#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "paireval/judge.hpp"

namespace paireval {

std::string sha256_hex_string(const std::string& data);

// SHA-256 over length-prefixed fields, hex-encoded. The key binds everything
// that could change a verdict: backend id, model, prompt, both label tokens,
// and the frozen decoding parameters.
std::string cache_key(const std::string& backend_id, const std::string& model,
                      const std::string& prompt, const std::string& label_first,
                      const std::string& label_second, const std::string& decoding_params);

// Append-only verdict log (one JSONL file per backend_id+model under the
// cache directory) with an in-memory index built at startup. Crash-safe:
// a torn tail line is ignored and counted, never fatal.
class VerdictCache {
  public:
    VerdictCache(std::string cache_dir, const std::string& backend_id, const std::string& model);

    std::optional<JudgeVerdict> lookup(const std::string& key) const;

    // Idempotent: a key already indexed with an identical payload is not
    // appended again.
    void store(const std::string& key, const JudgeVerdict& verdict);

    // Rewrites the log with one entry per key, sorted by key.
    void compact();

    std::size_t size() const;
    std::size_t corrupt_entries() const { return corrupt_entries_; }
    const std::string& path() const { return path_; }

  private:
    void append_locked(const std::string& key, const JudgeVerdict& verdict);

    std::string path_;
    mutable std::shared_mutex index_mutex_;
    std::unordered_map<std::string, JudgeVerdict> index_;
    std::mutex write_mutex_;
    std::ofstream out_;
    std::size_t corrupt_entries_ = 0;
};

// Consults the cache before delegating. Hits come back with cached=true and
// never touch the inner judge; misses are stored after the call.
class CachingJudge final : public Judge {
  public:
    CachingJudge(std::shared_ptr<Judge> inner, std::shared_ptr<VerdictCache> cache,
                 std::string model, std::string decoding_params);

    std::string id() const override { return inner_->id(); }
    JudgeVerdict judge_pair(const PairQuery& query) override;
    JudgeVerdict judge_direct(const DirectQuery& query) override;

    std::uint64_t hits() const { return hits_.load(); }

  private:
    std::shared_ptr<Judge> inner_;
    std::shared_ptr<VerdictCache> cache_;
    std::string model_;
    std::string decoding_params_;
    std::atomic<std::uint64_t> hits_{0};
};

} // namespace paireval
