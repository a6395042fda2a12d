#pragma once

#include <cstdint>
#include <span>

#include "paireval/core.hpp"
#include "paireval/rng.hpp"

namespace paireval {

// Turns a corpus dialogue into a comparison example: cut point t >= 1 chosen
// uniformly, history = utterances[0..t), response = utterances[t].text.
// The example id is "<dialogue_id>#<t>". Dialogues with < 2 utterances are
// not sampleable.
Conversation cut_dialogue(const Dialogue& dialogue, std::size_t cut);

// N distinct comparison examples sampled uniformly from a dialogue corpus
// (dialogue uniform, then cut point uniform). Duplicate ids are rejected and
// resampled. Deterministic in `seed`.
ComparisonSet sample_comparisons_from_corpus(std::span<const Dialogue> corpus, std::size_t n,
                                             std::uint64_t seed);

// N distinct conversations sampled uniformly without replacement from an
// already-scored dataset (the test-split configuration).
ComparisonSet sample_comparisons_from_conversations(std::span<const Conversation> pool,
                                                    std::size_t n, std::uint64_t seed);

// An explicit, user-provided comparison file.
ComparisonSet comparison_set_from_file(const std::string& path);

} // namespace paireval
