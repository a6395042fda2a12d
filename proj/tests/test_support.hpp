#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "paireval/core.hpp"
#include "paireval/judge.hpp"
#include "paireval/rng.hpp"

namespace test_support {

// Self-cleaning temp directory for loader/cache/CLI tests.
class TempDir {
  public:
    TempDir() {
        static int counter = 0;
        dir_ = std::filesystem::temp_directory_path() /
               ("paireval_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        const std::string p = path(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

  private:
    std::filesystem::path dir_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

inline paireval::Conversation make_conversation(const std::string& id, const std::string& history_text,
                                                const std::string& response) {
    return paireval::Conversation{id, {{"A", history_text}}, response};
}

// A judge with scripted probabilities, for exercising scorer arithmetic
// without the mock's semantics. Returns p_first_better = `value_for(prompt)`.
class StubJudge final : public paireval::Judge {
  public:
    explicit StubJudge(double constant_p) : constant_p_(constant_p) {}

    std::string id() const override { return "stub"; }

    paireval::JudgeVerdict judge_pair(const paireval::PairQuery& query) override {
        paireval::JudgeVerdict verdict;
        verdict.p_first_better = constant_p_;
        verdict.raw_probs[query.label_first] = constant_p_;
        verdict.raw_probs[query.label_second] = 1.0 - constant_p_;
        verdict.backend_id = id();
        return verdict;
    }

    paireval::JudgeVerdict judge_direct(const paireval::DirectQuery& query) override {
        paireval::JudgeVerdict verdict;
        verdict.p_first_better = constant_p_;
        verdict.raw_probs[query.positive_label] = constant_p_;
        verdict.raw_probs[query.negative_label] = 1.0 - constant_p_;
        verdict.backend_id = id();
        return verdict;
    }

  private:
    double constant_p_;
};

// Conversation generator for fuzz corpora. `gnarly` adds newlines, quotes,
// braces, backslashes, and UTF-8 to stress JSON round-trips; without it the
// texts stay single-line (the injectivity corpus).
class ConversationGenerator {
  public:
    explicit ConversationGenerator(std::uint64_t seed, bool gnarly)
        : rng_(seed), gnarly_(gnarly) {}

    paireval::Conversation next(std::size_t index) {
        paireval::Conversation conv;
        conv.id = "conv-" + std::to_string(index);
        const std::size_t turns = 1 + rng_.bounded(4);
        for (std::size_t t = 0; t < turns; ++t) {
            conv.history.push_back({speaker(), text()});
        }
        conv.response = text();
        return conv;
    }

  private:
    std::string speaker() {
        static const char* speakers[] = {"A", "B", "user", "system", "Speaker 1"};
        return speakers[rng_.bounded(5)];
    }

    std::string text() {
        static const char* words[] = {"hello", "coffee", "weather", "today", "nice",
                                      "what",  "think",  "maybe",  "sure", "really"};
        static const char* gnarly_bits[] = {"\"quoted\"", "back\\slash", "{conversation_a}",
                                            "line\nbreak", "tab\there", "caf\xc3\xa9"};
        std::string out;
        const std::size_t n = 1 + rng_.bounded(6);
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) out += ' ';
            if (gnarly_ && rng_.bounded(4) == 0) {
                out += gnarly_bits[rng_.bounded(6)];
            } else {
                out += words[rng_.bounded(10)];
            }
        }
        // A trailing counter keeps distinct draws textually distinct.
        out += ' ';
        out += std::to_string(rng_.next() % 100000);
        return out;
    }

    paireval::SplitMix64 rng_;
    bool gnarly_;
};

} // namespace test_support
