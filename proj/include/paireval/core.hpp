#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace paireval {

// One turn of a dialogue. Speaker labels are free strings (corpora mix
// human-human and human-system dialogues), both fields non-empty.
struct Utterance {
    std::string speaker;
    std::string text;

    bool operator==(const Utterance&) const = default;
};

// A dialogue history plus the candidate follow-up response under evaluation.
// This is the unit everything downstream scores.
struct Conversation {
    std::string id;
    std::vector<Utterance> history; // length >= 1
    std::string response;           // non-empty

    bool operator==(const Conversation&) const = default;
};

// One meta-evaluation record: a conversation, an optional gold reference
// response, and the human annotation score.
struct MetaEvalInstance {
    Conversation conversation;
    std::optional<std::string> reference;
    double human_score = 0.0; // finite

    bool operator==(const MetaEvalInstance&) const = default;
};

// A raw multi-turn dialogue from a corpus (no designated response). Source
// material for comparison-example sampling and training-pair synthesis.
struct Dialogue {
    std::string id;
    std::vector<Utterance> utterances;

    bool operator==(const Dialogue&) const = default;
};

// A human-written adversarial response for one dialogue context.
struct AdversarialRecord {
    std::string id;
    std::vector<Utterance> history;
    std::string adversarial_response;
};

// One robustness-protocol instance: the original response and a corrupted
// variant of it, sharing one history. original != corrupted.
struct RobustnessInstance {
    std::string id;
    std::vector<Utterance> history;
    std::string original_response;
    std::string corrupted_response;
    std::string attack_type;
};

enum class ComparisonSource { kCorpusRandom, kTestSplit, kExplicitFile };

const char* to_string(ComparisonSource source);

// The opponents a target is compared against. Example ids are unique,
// N >= 1. `seed` records how the set was sampled (0 for explicit files).
struct ComparisonSet {
    std::vector<Conversation> examples;
    ComparisonSource source = ComparisonSource::kExplicitFile;
    std::uint64_t seed = 0;
};

// The one supported on-disk record format (native dataset formats are
// converted to it once, outside this library).
enum class RecordFormat { kCanonicalLines };

struct LoadOptions {
    // Strict mode (default) aborts on the first malformed record; lenient
    // skips it and counts a warning. Data corruption should be loud.
    bool lenient = false;
    RecordFormat format = RecordFormat::kCanonicalLines;
};

template <typename T>
struct Loaded {
    std::vector<T> items;
    std::size_t skipped = 0; // always 0 in strict mode
};

// Canonical-lines loaders: one JSON object per line, UTF-8. Unknown fields
// are ignored so meta-eval files can be fed wherever conversations are
// expected. Errors carry the path and 1-based line number.
Loaded<Conversation> load_conversations(const std::string& path, const LoadOptions& opts = {});
Loaded<MetaEvalInstance> load_meta_eval(const std::string& path, const LoadOptions& opts = {});
Loaded<Dialogue> load_dialogues(const std::string& path, const LoadOptions& opts = {});
Loaded<AdversarialRecord> load_adversarial(const std::string& path, const LoadOptions& opts = {});
Loaded<RobustnessInstance> load_robustness(const std::string& path, const LoadOptions& opts = {});

// Single-record (de)serialization in the canonical schema.
std::string serialize_conversation(const Conversation& conv);
Conversation parse_conversation_line(const std::string& line);

// Deterministic rendering used inside prompts and cache keys:
//   "<speaker>: <text>" per history utterance, then "Response: <response>",
// joined with "\n", no trailing newline. Identical input, identical bytes.
std::string render_conversation(const Conversation& conv);

// Invariant checks (throw DataError). Loaders run these on every record.
void validate(const Utterance& utt);
void validate(const Conversation& conv);

} // namespace paireval
