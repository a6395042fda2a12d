#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "paireval/core.hpp"
#include "paireval/prompt.hpp"
#include "paireval/rng.hpp"

namespace paireval {

enum class NegativeKind { kRandom, kAdversarial };
const char* to_string(NegativeKind kind);

enum class Slot { kA, kB };

// One synthesized comparison example for fine-tuning export: a shared
// history, a genuine follow-up, a negative of the stated kind, and the slot
// the positive was randomly assigned to.
struct TrainingPair {
    std::vector<Utterance> history;
    std::string positive_response;
    std::string negative_response;
    NegativeKind negative_kind = NegativeKind::kRandom;
    Slot positive_slot = Slot::kA;
    std::string pair_id;
    std::uint64_t seed_trace = 0;
};

// Adversarial responses keyed by dialogue id. Duplicate ids are a load-time
// error (enforced by load_adversarial).
class AdversarialPool {
  public:
    AdversarialPool() = default;
    explicit AdversarialPool(std::span<const AdversarialRecord> records);

    std::optional<std::string> lookup(const std::string& dialogue_id) const;
    bool empty() const { return by_id_.empty(); }

  private:
    std::unordered_map<std::string, std::string> by_id_;
};

// Uniform dialogue pick + uniform cut point t >= 1: history = utterances
// before t, positive = utterance t. Dialogues with < 2 utterances are
// excluded up front (callers report the skip count as a warning).
struct PositiveSample {
    std::size_t dialogue_index = 0;
    std::vector<Utterance> history;
    std::string positive_response;
};

PositiveSample sample_positive(std::span<const Dialogue> corpus, SplitMix64& dialogue_rng,
                               SplitMix64& cut_rng);

// Uniformly sampled utterance from a dialogue other than the excluded one;
// resamples on collision with `avoid` text (max 10 attempts, then error).
std::string sample_random_negative(std::span<const Dialogue> corpus,
                                   std::size_t exclude_dialogue_index, const std::string& avoid,
                                   SplitMix64& rng);

struct SynthOptions {
    std::size_t count = 1;
    double adversarial_fraction = 0.5; // used only when a pool is supplied
    std::uint64_t seed = 0;
};

struct SynthStats {
    std::size_t emitted = 0;
    std::size_t adversarial = 0;
    std::size_t random = 0;
    std::size_t adversarial_fallbacks = 0; // wanted adversarial, pool had no match
    std::size_t short_dialogues_skipped = 0;
    std::size_t slot_a = 0;
};

struct SynthResult {
    std::vector<TrainingPair> pairs;
    SynthStats stats;
};

// Deterministic in (corpus bytes, options): one substream per sampling role,
// consumed sequentially. Export via serialize_training_pair is byte-stable.
SynthResult synthesize(std::span<const Dialogue> corpus, const AdversarialPool& pool,
                       const SynthOptions& opts);

// {"prompt": rendered pairwise prompt, "completion": positive label token,
//  "meta": {"negative_kind": ..., "pair_id": ...}}
std::string serialize_training_pair(const TrainingPair& pair, const PromptTemplate& tpl);

} // namespace paireval
