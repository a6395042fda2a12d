#include "paireval/core.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"

namespace paireval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_blank(const std::string& s) {
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
    }
    return true;
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line_no, const std::string& msg) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
}

std::vector<Utterance> parse_utterances(const json& arr, const char* field) {
    if (!arr.is_array()) throw DataError(std::string("field '") + field + "' must be an array");
    std::vector<Utterance> out;
    out.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("speaker") || !item.contains("text") ||
            !item["speaker"].is_string() || !item["text"].is_string()) {
            throw DataError(std::string("each '") + field +
                            "' entry must be {\"speaker\": str, \"text\": str}");
        }
        Utterance utt{item["speaker"].get<std::string>(), item["text"].get<std::string>()};
        validate(utt);
        out.push_back(std::move(utt));
    }
    return out;
}

std::string require_string(const json& rec, const char* field) {
    if (!rec.contains(field)) throw DataError(std::string("missing field '") + field + "'");
    if (!rec[field].is_string()) throw DataError(std::string("field '") + field + "' must be a string");
    return rec[field].get<std::string>();
}

json parse_record(const std::string& line) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw DataError("invalid JSON");
    if (!rec.is_object()) throw DataError("record must be a JSON object");
    return rec;
}

Conversation conversation_from_json(const json& rec) {
    Conversation conv;
    conv.id = require_string(rec, "id");
    if (!rec.contains("history")) throw DataError("missing field 'history'");
    conv.history = parse_utterances(rec["history"], "history");
    conv.response = require_string(rec, "response");
    validate(conv);
    return conv;
}

const std::string& item_id(const Conversation& c) { return c.id; }
const std::string& item_id(const MetaEvalInstance& m) { return m.conversation.id; }
const std::string& item_id(const Dialogue& d) { return d.id; }
const std::string& item_id(const AdversarialRecord& a) { return a.id; }
const std::string& item_id(const RobustnessInstance& r) { return r.id; }

// Shared line-by-line driver. `parse` throws DataError for a bad record.
template <typename T, typename Parse>
Loaded<T> load_lines(const std::string& path, const LoadOptions& opts, Parse parse) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);

    Loaded<T> result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        try {
            T item = parse(line);
            const std::string& id = item_id(item);
            if (!seen_ids.insert(id).second) throw DataError("duplicate id '" + id + "'");
            result.items.push_back(std::move(item));
        } catch (const DataError& e) {
            if (opts.lenient) {
                ++result.skipped;
                continue;
            }
            fail_at(path, line_no, e.what());
        }
    }
    return result;
}

} // namespace

const char* to_string(ComparisonSource source) {
    switch (source) {
    case ComparisonSource::kCorpusRandom: return "corpus-random";
    case ComparisonSource::kTestSplit: return "test-split";
    case ComparisonSource::kExplicitFile: return "explicit-file";
    }
    return "unknown";
}

void validate(const Utterance& utt) {
    if (utt.speaker.empty()) throw DataError("utterance speaker is empty");
    if (is_blank(utt.text)) throw DataError("utterance text is empty");
}

void validate(const Conversation& conv) {
    if (conv.id.empty()) throw DataError("conversation id is empty");
    if (conv.history.empty()) throw DataError("conversation '" + conv.id + "' has empty history");
    if (is_blank(conv.response)) throw DataError("conversation '" + conv.id + "' has empty response");
    for (const auto& utt : conv.history) validate(utt);
}

Loaded<Conversation> load_conversations(const std::string& path, const LoadOptions& opts) {
    return load_lines<Conversation>(path, opts,
                                    [](const std::string& line) { return parse_conversation_line(line); });
}

Loaded<MetaEvalInstance> load_meta_eval(const std::string& path, const LoadOptions& opts) {
    return load_lines<MetaEvalInstance>(path, opts, [](const std::string& line) {
        json rec = parse_record(line);
        MetaEvalInstance inst;
        inst.conversation = conversation_from_json(rec);
        if (rec.contains("reference") && !rec["reference"].is_null()) {
            if (!rec["reference"].is_string()) throw DataError("field 'reference' must be a string or null");
            inst.reference = rec["reference"].get<std::string>();
        }
        if (!rec.contains("human_score")) throw DataError("missing field 'human_score'");
        if (!rec["human_score"].is_number()) throw DataError("field 'human_score' must be a number");
        inst.human_score = rec["human_score"].get<double>();
        if (!std::isfinite(inst.human_score))
            throw DataError("field 'human_score' must be finite");
        return inst;
    });
}

Loaded<Dialogue> load_dialogues(const std::string& path, const LoadOptions& opts) {
    return load_lines<Dialogue>(path, opts, [](const std::string& line) {
        json rec = parse_record(line);
        Dialogue dlg;
        dlg.id = require_string(rec, "id");
        if (!rec.contains("utterances")) throw DataError("missing field 'utterances'");
        dlg.utterances = parse_utterances(rec["utterances"], "utterances");
        if (dlg.utterances.empty()) throw DataError("dialogue '" + dlg.id + "' has no utterances");
        return dlg;
    });
}

Loaded<AdversarialRecord> load_adversarial(const std::string& path, const LoadOptions& opts) {
    return load_lines<AdversarialRecord>(path, opts, [](const std::string& line) {
        json rec = parse_record(line);
        AdversarialRecord adv;
        adv.id = require_string(rec, "id");
        if (!rec.contains("history")) throw DataError("missing field 'history'");
        adv.history = parse_utterances(rec["history"], "history");
        adv.adversarial_response = require_string(rec, "adversarial_response");
        if (is_blank(adv.adversarial_response))
            throw DataError("record '" + adv.id + "' has empty adversarial_response");
        return adv;
    });
}

Loaded<RobustnessInstance> load_robustness(const std::string& path, const LoadOptions& opts) {
    return load_lines<RobustnessInstance>(path, opts, [](const std::string& line) {
        json rec = parse_record(line);
        RobustnessInstance inst;
        inst.id = require_string(rec, "id");
        if (!rec.contains("history")) throw DataError("missing field 'history'");
        inst.history = parse_utterances(rec["history"], "history");
        if (inst.history.empty()) throw DataError("record '" + inst.id + "' has empty history");
        inst.original_response = require_string(rec, "original");
        inst.corrupted_response = require_string(rec, "corrupted");
        inst.attack_type = require_string(rec, "attack_type");
        if (inst.original_response == inst.corrupted_response)
            throw DataError("record '" + inst.id + "': original and corrupted responses are equal");
        return inst;
    });
}

std::string serialize_conversation(const Conversation& conv) {
    ordered_json rec;
    rec["id"] = conv.id;
    ordered_json history = ordered_json::array();
    for (const auto& utt : conv.history) {
        history.push_back({{"speaker", utt.speaker}, {"text", utt.text}});
    }
    rec["history"] = std::move(history);
    rec["response"] = conv.response;
    return rec.dump();
}

Conversation parse_conversation_line(const std::string& line) {
    return conversation_from_json(parse_record(line));
}

std::string render_conversation(const Conversation& conv) {
    std::string out;
    std::size_t size = 0;
    for (const auto& utt : conv.history) size += utt.speaker.size() + utt.text.size() + 3;
    out.reserve(size + conv.response.size() + 10);
    for (const auto& utt : conv.history) {
        out += utt.speaker;
        out += ": ";
        out += utt.text;
        out += '\n';
    }
    out += "Response: ";
    out += conv.response;
    return out;
}

} // namespace paireval
