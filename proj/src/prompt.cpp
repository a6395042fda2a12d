#include "paireval/prompt.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "paireval/errors.hpp"

namespace paireval {

namespace {

constexpr const char* kSlotA = "{conversation_a}";
constexpr const char* kSlotB = "{conversation_b}";
constexpr const char* kSlotDirect = "{conversation}";

std::size_t count_occurrences(const std::string& body, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = body.find(needle); pos != std::string::npos;
         pos = body.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

void require_exactly_once(const std::string& body, const char* needle, const std::string& origin) {
    const std::size_t n = count_occurrences(body, needle);
    if (n != 1) {
        throw DataError(origin + ": placeholder " + needle + " must appear exactly once (found " +
                        std::to_string(n) + ")");
    }
}

void require_absent(const std::string& body, const char* needle, const std::string& origin) {
    if (count_occurrences(body, needle) != 0) {
        throw DataError(origin + ": placeholder " + needle + " is not allowed in this template kind");
    }
}

void validate_template(const PromptTemplate& tpl, const std::string& origin) {
    if (tpl.label_first.empty() || tpl.label_second.empty())
        throw DataError(origin + ": labels must be non-empty");
    if (tpl.label_first == tpl.label_second)
        throw DataError(origin + ": label_first and label_second must differ");
    if (tpl.kind == TemplateKind::kPairwise) {
        require_exactly_once(tpl.body, kSlotA, origin);
        require_exactly_once(tpl.body, kSlotB, origin);
        require_absent(tpl.body, kSlotDirect, origin);
    } else {
        require_exactly_once(tpl.body, kSlotDirect, origin);
        require_absent(tpl.body, kSlotA, origin);
        require_absent(tpl.body, kSlotB, origin);
    }
}

// Replace each placeholder once, scanning only the original body. Values are
// copied verbatim, so braces inside conversations survive untouched.
std::string substitute(const std::string& body,
                       const std::array<std::pair<std::string, std::string>, 2>& slots,
                       std::size_t n_slots) {
    struct Hit {
        std::size_t pos;
        std::size_t len;
        const std::string* value;
    };
    std::array<Hit, 2> hits{};
    std::size_t n_hits = 0;
    for (std::size_t i = 0; i < n_slots; ++i) {
        const std::size_t pos = body.find(slots[i].first);
        if (pos == std::string::npos) continue; // validated earlier; defensive
        hits[n_hits++] = Hit{pos, slots[i].first.size(), &slots[i].second};
    }
    if (n_hits == 2 && hits[0].pos > hits[1].pos) std::swap(hits[0], hits[1]);

    std::string out;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < n_hits; ++i) {
        out.append(body, cursor, hits[i].pos - cursor);
        out += *hits[i].value;
        cursor = hits[i].pos + hits[i].len;
    }
    out.append(body, cursor, body.size() - cursor);
    return out;
}

} // namespace

PromptTemplate default_pairwise_template() {
    PromptTemplate tpl;
    tpl.kind = TemplateKind::kPairwise;
    tpl.body = "You will see two conversations, each ending with a response.\n"
               "Choose the better response, judged as a follow-up to its own conversation.\n"
               "\n"
               "{conversation_a}\n"
               "\n"
               "{conversation_b}\n"
               "\n"
               "Which response is better? Answer (A or B):";
    return tpl;
}

PromptTemplate default_direct_template() {
    PromptTemplate tpl;
    tpl.kind = TemplateKind::kDirect;
    tpl.body = "Read the conversation below and the response that ends it.\n"
               "\n"
               "{conversation}\n"
               "\n"
               "Is the above response a good response to the given conversation?";
    return tpl;
}

PromptTemplate parse_template(const std::string& text, TemplateKind kind, const std::string& origin) {
    PromptTemplate tpl;
    tpl.kind = kind;

    if (text.rfind("---", 0) != 0 && text.find("\n---") == std::string::npos)
        throw DataError(origin + ": missing '---' line separating header from body");

    std::istringstream in(text);
    std::string line;
    bool saw_separator = false;
    std::size_t header_chars = 0;
    while (std::getline(in, line)) {
        header_chars += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "---") {
            saw_separator = true;
            break;
        }
        if (line.empty()) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw DataError(origin + ": header line is not 'key: value': " + line);
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        if (key == "label_first") tpl.label_first = value;
        else if (key == "label_second") tpl.label_second = value;
        else if (key == "positive_label") tpl.positive_label = value;
        else if (key == "negative_label") tpl.negative_label = value;
        else throw DataError(origin + ": unknown header key '" + key + "'");
    }
    if (!saw_separator)
        throw DataError(origin + ": missing '---' line separating header from body");

    tpl.body = header_chars >= text.size() ? std::string() : text.substr(header_chars);
    // Body keeps everything after the separator verbatim, except one trailing
    // newline (editors add it; prompts should end where the template ends).
    if (!tpl.body.empty() && tpl.body.back() == '\n') tpl.body.pop_back();

    validate_template(tpl, origin);
    return tpl;
}

PromptTemplate load_template(const std::string& path, TemplateKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open template: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_template(buf.str(), kind, path);
}

std::string render_pair_prompt(const PromptTemplate& tpl, const Conversation& first,
                               const Conversation& second) {
    if (tpl.kind != TemplateKind::kPairwise)
        throw DataError("render_pair_prompt requires a pairwise template");
    const std::string value_a =
        "Conversation " + tpl.label_first + ":\n" + render_conversation(first);
    const std::string value_b =
        "Conversation " + tpl.label_second + ":\n" + render_conversation(second);
    return substitute(tpl.body, {{{kSlotA, value_a}, {kSlotB, value_b}}}, 2);
}

std::string render_direct_prompt(const PromptTemplate& tpl, const Conversation& conv) {
    if (tpl.kind != TemplateKind::kDirect)
        throw DataError("render_direct_prompt requires a direct template");
    return substitute(tpl.body, {{{kSlotDirect, render_conversation(conv)}, {"", ""}}}, 1);
}

} // namespace paireval
