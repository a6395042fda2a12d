#include "paireval/cache.hpp"

#include <algorithm>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "paireval/errors.hpp"

namespace paireval {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 computation failed");
    }
    EVP_MD_CTX_free(ctx);

    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sanitize_for_filename(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("default") : out;
}

std::string encode_record(const std::string& key, const JudgeVerdict& verdict) {
    ordered_json rec;
    rec["key"] = key;
    rec["p"] = verdict.p_first_better;
    ordered_json raw = ordered_json::object();
    for (const auto& [token, prob] : verdict.raw_probs) raw[token] = prob;
    rec["raw"] = std::move(raw);
    rec["backend"] = verdict.backend_id;
    return rec.dump();
}

bool decode_record(const std::string& line, std::string& key, JudgeVerdict& verdict) {
    const auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) return false;
    if (!rec.contains("key") || !rec["key"].is_string()) return false;
    if (!rec.contains("p") || !rec["p"].is_number()) return false;
    if (!rec.contains("raw") || !rec["raw"].is_object()) return false;
    if (!rec.contains("backend") || !rec["backend"].is_string()) return false;
    key = rec["key"].get<std::string>();
    verdict = JudgeVerdict{};
    verdict.p_first_better = rec["p"].get<double>();
    for (const auto& [token, prob] : rec["raw"].items()) {
        if (!prob.is_number()) return false;
        verdict.raw_probs[token] = prob.get<double>();
    }
    verdict.backend_id = rec["backend"].get<std::string>();
    return true;
}

} // namespace

std::string sha256_hex_string(const std::string& data) { return sha256_hex(data); }

std::string cache_key(const std::string& backend_id, const std::string& model,
                      const std::string& prompt, const std::string& label_first,
                      const std::string& label_second, const std::string& decoding_params) {
    std::string material;
    for (const std::string* field :
         {&backend_id, &model, &prompt, &label_first, &label_second, &decoding_params}) {
        material += std::to_string(field->size());
        material += ':';
        material += *field;
    }
    return sha256_hex(material);
}

VerdictCache::VerdictCache(std::string cache_dir, const std::string& backend_id,
                           const std::string& model) {
    fs::create_directories(cache_dir);
    path_ = (fs::path(cache_dir) /
             (sanitize_for_filename(backend_id) + "__" + sanitize_for_filename(model) + ".jsonl"))
                .string();

    std::ifstream in(path_, std::ios::binary);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::string key;
            JudgeVerdict verdict;
            if (decode_record(line, key, verdict)) {
                index_[key] = std::move(verdict);
            } else {
                ++corrupt_entries_;
            }
        }
    }

    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw DataError("cannot open cache log for writing: " + path_);
}

std::optional<JudgeVerdict> VerdictCache::lookup(const std::string& key) const {
    std::shared_lock lock(index_mutex_);
    const auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    JudgeVerdict verdict = it->second;
    verdict.cached = true;
    return verdict;
}

void VerdictCache::store(const std::string& key, const JudgeVerdict& verdict) {
    {
        std::shared_lock lock(index_mutex_);
        const auto it = index_.find(key);
        if (it != index_.end() && encode_record(key, it->second) == encode_record(key, verdict))
            return;
    }
    std::unique_lock index_lock(index_mutex_);
    JudgeVerdict stored = verdict;
    stored.cached = false; // the flag describes retrieval, not storage
    index_[key] = stored;
    index_lock.unlock();

    std::lock_guard write_lock(write_mutex_);
    append_locked(key, stored);
}

void VerdictCache::append_locked(const std::string& key, const JudgeVerdict& verdict) {
    out_ << encode_record(key, verdict) << '\n';
    out_.flush();
}

void VerdictCache::compact() {
    std::unique_lock index_lock(index_mutex_);
    std::lock_guard write_lock(write_mutex_);

    std::vector<const std::string*> keys;
    keys.reserve(index_.size());
    for (const auto& [key, verdict] : index_) keys.push_back(&key);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    const std::string tmp_path = path_ + ".compact";
    {
        std::ofstream tmp(tmp_path, std::ios::binary | std::ios::trunc);
        if (!tmp) throw DataError("cannot open compaction file: " + tmp_path);
        for (const std::string* key : keys) tmp << encode_record(*key, index_.at(*key)) << '\n';
    }
    out_.close();
    fs::rename(tmp_path, path_);
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw DataError("cannot reopen cache log after compaction: " + path_);
}

std::size_t VerdictCache::size() const {
    std::shared_lock lock(index_mutex_);
    return index_.size();
}

CachingJudge::CachingJudge(std::shared_ptr<Judge> inner, std::shared_ptr<VerdictCache> cache,
                           std::string model, std::string decoding_params)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      model_(std::move(model)),
      decoding_params_(std::move(decoding_params)) {}

JudgeVerdict CachingJudge::judge_pair(const PairQuery& query) {
    const std::string key = cache_key(inner_->id(), model_, query.prompt, query.label_first,
                                      query.label_second, decoding_params_ + ";mode=pair");
    if (auto hit = cache_->lookup(key)) {
        hits_.fetch_add(1, std::memory_order_relaxed);
        return *hit;
    }
    JudgeVerdict verdict = inner_->judge_pair(query);
    cache_->store(key, verdict);
    return verdict;
}

JudgeVerdict CachingJudge::judge_direct(const DirectQuery& query) {
    const std::string key = cache_key(inner_->id(), model_, query.prompt, query.positive_label,
                                      query.negative_label, decoding_params_ + ";mode=direct");
    if (auto hit = cache_->lookup(key)) {
        hits_.fetch_add(1, std::memory_order_relaxed);
        return *hit;
    }
    JudgeVerdict verdict = inner_->judge_direct(query);
    cache_->store(key, verdict);
    return verdict;
}

} // namespace paireval
