#include "paireval/sample.hpp"

#include <unordered_set>

#include "paireval/errors.hpp"

namespace paireval {

namespace {

constexpr int kMaxResampleAttempts = 1000;

std::vector<std::size_t> sampleable_indices(std::span<const Dialogue> corpus) {
    std::vector<std::size_t> indices;
    indices.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].utterances.size() >= 2) indices.push_back(i);
    }
    return indices;
}

} // namespace

Conversation cut_dialogue(const Dialogue& dialogue, std::size_t cut) {
    if (dialogue.utterances.size() < 2)
        throw DataError("dialogue '" + dialogue.id + "' is too short to cut");
    if (cut < 1 || cut >= dialogue.utterances.size())
        throw DataError("cut point out of range for dialogue '" + dialogue.id + "'");
    Conversation conv;
    conv.id = dialogue.id + "#" + std::to_string(cut);
    conv.history.assign(dialogue.utterances.begin(),
                        dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(cut));
    conv.response = dialogue.utterances[cut].text;
    return conv;
}

ComparisonSet sample_comparisons_from_corpus(std::span<const Dialogue> corpus, std::size_t n,
                                             std::uint64_t seed) {
    if (n < 1) throw DataError("comparison count must be >= 1");
    const auto usable = sampleable_indices(corpus);
    if (usable.empty()) throw DataError("corpus has no dialogue with >= 2 utterances");

    SplitMix64 rng = stream_for(seed, RngRole::kComparisonSampling);
    ComparisonSet set;
    set.source = ComparisonSource::kCorpusRandom;
    set.seed = seed;
    std::unordered_set<std::string> ids;
    int attempts = 0;
    while (set.examples.size() < n) {
        if (++attempts > kMaxResampleAttempts + static_cast<int>(n))
            throw DataError("could not sample " + std::to_string(n) +
                            " distinct comparison examples from the corpus");
        const Dialogue& dialogue = corpus[usable[rng.bounded(usable.size())]];
        const std::size_t cut = 1 + rng.bounded(dialogue.utterances.size() - 1);
        Conversation conv = cut_dialogue(dialogue, cut);
        if (!ids.insert(conv.id).second) continue;
        set.examples.push_back(std::move(conv));
    }
    return set;
}

ComparisonSet sample_comparisons_from_conversations(std::span<const Conversation> pool,
                                                    std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DataError("comparison count must be >= 1");
    if (pool.size() < n)
        throw DataError("pool of " + std::to_string(pool.size()) +
                        " conversations cannot provide " + std::to_string(n) + " distinct examples");

    SplitMix64 rng = stream_for(seed, RngRole::kComparisonSampling);
    ComparisonSet set;
    set.source = ComparisonSource::kTestSplit;
    set.seed = seed;
    std::unordered_set<std::size_t> used;
    while (set.examples.size() < n) {
        const std::size_t pick = rng.bounded(pool.size());
        if (!used.insert(pick).second) continue;
        set.examples.push_back(pool[pick]);
    }
    return set;
}

ComparisonSet comparison_set_from_file(const std::string& path) {
    ComparisonSet set;
    set.examples = load_conversations(path).items;
    set.source = ComparisonSource::kExplicitFile;
    set.seed = 0;
    if (set.examples.empty()) throw DataError("comparison file is empty: " + path);
    return set;
}

} // namespace paireval
