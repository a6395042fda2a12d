#include "paireval/synth.hpp"

#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"

namespace paireval {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kNegativeCollisionAttempts = 10;

std::vector<std::size_t> usable_dialogues(std::span<const Dialogue> corpus,
                                          std::size_t& skipped) {
    std::vector<std::size_t> usable;
    usable.reserve(corpus.size());
    skipped = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].utterances.size() >= 2) {
            usable.push_back(i);
        } else {
            ++skipped;
        }
    }
    return usable;
}

} // namespace

const char* to_string(NegativeKind kind) {
    return kind == NegativeKind::kAdversarial ? "adversarial" : "random";
}

AdversarialPool::AdversarialPool(std::span<const AdversarialRecord> records) {
    for (const auto& record : records) {
        by_id_.emplace(record.id, record.adversarial_response);
    }
}

std::optional<std::string> AdversarialPool::lookup(const std::string& dialogue_id) const {
    const auto it = by_id_.find(dialogue_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

namespace {

PositiveSample sample_positive_indexed(std::span<const Dialogue> corpus,
                                       std::span<const std::size_t> usable,
                                       SplitMix64& dialogue_rng, SplitMix64& cut_rng) {
    if (usable.empty()) throw DataError("corpus has no dialogue with >= 2 utterances");

    const std::size_t index = usable[dialogue_rng.bounded(usable.size())];
    const Dialogue& dialogue = corpus[index];
    const std::size_t cut = 1 + cut_rng.bounded(dialogue.utterances.size() - 1);

    PositiveSample sample;
    sample.dialogue_index = index;
    sample.history.assign(dialogue.utterances.begin(),
                          dialogue.utterances.begin() + static_cast<std::ptrdiff_t>(cut));
    sample.positive_response = dialogue.utterances[cut].text;
    return sample;
}

} // namespace

PositiveSample sample_positive(std::span<const Dialogue> corpus, SplitMix64& dialogue_rng,
                               SplitMix64& cut_rng) {
    std::size_t skipped = 0;
    const auto usable = usable_dialogues(corpus, skipped);
    return sample_positive_indexed(corpus, usable, dialogue_rng, cut_rng);
}

std::string sample_random_negative(std::span<const Dialogue> corpus,
                                   std::size_t exclude_dialogue_index, const std::string& avoid,
                                   SplitMix64& rng) {
    bool has_candidate = false;
    for (std::size_t i = 0; i < corpus.size() && !has_candidate; ++i) {
        has_candidate = i != exclude_dialogue_index && !corpus[i].utterances.empty();
    }
    if (!has_candidate) throw DataError("random negative sampling needs at least 2 dialogues");

    for (int attempt = 0; attempt < kNegativeCollisionAttempts; ++attempt) {
        // Uniform over other dialogues (rejecting the excluded one), then
        // uniform over that dialogue's utterances.
        std::size_t chosen;
        do {
            chosen = rng.bounded(corpus.size());
        } while (chosen == exclude_dialogue_index || corpus[chosen].utterances.empty());
        const Dialogue& dialogue = corpus[chosen];
        const std::string& text =
            dialogue.utterances[rng.bounded(dialogue.utterances.size())].text;
        if (text != avoid) return text;
    }
    throw DataError("could not sample a negative distinct from the positive after " +
                    std::to_string(kNegativeCollisionAttempts) + " attempts");
}

SynthResult synthesize(std::span<const Dialogue> corpus, const AdversarialPool& pool,
                       const SynthOptions& opts) {
    if (opts.count < 1) throw DataError("pair count must be >= 1");
    if (corpus.empty()) throw DataError("corpus is empty");
    if (opts.adversarial_fraction < 0.0 || opts.adversarial_fraction > 1.0)
        throw DataError("adversarial fraction must lie in [0, 1]");

    SynthResult result;
    const auto usable = usable_dialogues(corpus, result.stats.short_dialogues_skipped);

    SplitMix64 dialogue_rng = stream_for(opts.seed, RngRole::kDialoguePick);
    SplitMix64 cut_rng = stream_for(opts.seed, RngRole::kCutPoint);
    SplitMix64 negative_rng = stream_for(opts.seed, RngRole::kNegativePick);
    SplitMix64 slot_rng = stream_for(opts.seed, RngRole::kSlotAssign);
    SplitMix64 kind_rng = stream_for(opts.seed, RngRole::kNegativeKind);

    const bool want_adversarial = !pool.empty() && opts.adversarial_fraction > 0.0;

    result.pairs.reserve(opts.count);
    for (std::size_t i = 0; i < opts.count; ++i) {
        PositiveSample positive = sample_positive_indexed(corpus, usable, dialogue_rng, cut_rng);

        TrainingPair pair;
        pair.history = std::move(positive.history);
        pair.positive_response = std::move(positive.positive_response);
        pair.pair_id = "pair-" + std::to_string(i);
        pair.seed_trace = derive_seed(opts.seed, i);

        pair.negative_kind = NegativeKind::kRandom;
        if (want_adversarial && kind_rng.bernoulli(opts.adversarial_fraction)) {
            const auto adversarial = pool.lookup(corpus[positive.dialogue_index].id);
            if (adversarial && *adversarial != pair.positive_response) {
                pair.negative_kind = NegativeKind::kAdversarial;
                pair.negative_response = *adversarial;
            } else {
                ++result.stats.adversarial_fallbacks;
            }
        }
        if (pair.negative_kind == NegativeKind::kRandom) {
            pair.negative_response = sample_random_negative(
                corpus, positive.dialogue_index, pair.positive_response, negative_rng);
            ++result.stats.random;
        } else {
            ++result.stats.adversarial;
        }

        pair.positive_slot = (slot_rng.next() & 1) == 0 ? Slot::kA : Slot::kB;
        if (pair.positive_slot == Slot::kA) ++result.stats.slot_a;

        ++result.stats.emitted;
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

std::string serialize_training_pair(const TrainingPair& pair, const PromptTemplate& tpl) {
    Conversation slot_a{pair.pair_id + "-a", pair.history,
                        pair.positive_slot == Slot::kA ? pair.positive_response
                                                       : pair.negative_response};
    Conversation slot_b{pair.pair_id + "-b", pair.history,
                        pair.positive_slot == Slot::kA ? pair.negative_response
                                                       : pair.positive_response};

    ordered_json rec;
    rec["prompt"] = render_pair_prompt(tpl, slot_a, slot_b);
    rec["completion"] =
        pair.positive_slot == Slot::kA ? tpl.label_first : tpl.label_second;
    ordered_json meta;
    meta["negative_kind"] = to_string(pair.negative_kind);
    meta["pair_id"] = pair.pair_id;
    rec["meta"] = std::move(meta);
    return rec.dump();
}

} // namespace paireval
