#pragma once

#include <string>

#include "paireval/core.hpp"

namespace paireval {

enum class TemplateKind { kPairwise, kDirect };

// A validated prompt template. Pairwise bodies contain {conversation_a} and
// {conversation_b} exactly once each; direct bodies contain {conversation}
// exactly once. Substitution is single-pass: placeholder-looking text inside
// a conversation is never re-expanded.
struct PromptTemplate {
    TemplateKind kind = TemplateKind::kPairwise;
    std::string body;
    std::string label_first = "A";
    std::string label_second = "B";
    std::string positive_label = "Yes";
    std::string negative_label = "No";
};

// The templates the CLI uses when no --template is given.
PromptTemplate default_pairwise_template();
PromptTemplate default_direct_template();

// Template files: a header block of "key: value" lines (label_first,
// label_second, positive_label, negative_label; all optional), a line "---",
// then the body verbatim.
PromptTemplate load_template(const std::string& path, TemplateKind kind);
PromptTemplate parse_template(const std::string& text, TemplateKind kind, const std::string& origin);

// {conversation_a} -> "Conversation <label_first>:\n" + render_conversation(first),
// {conversation_b} likewise with label_second.
std::string render_pair_prompt(const PromptTemplate& tpl, const Conversation& first,
                               const Conversation& second);

std::string render_direct_prompt(const PromptTemplate& tpl, const Conversation& conv);

} // namespace paireval
