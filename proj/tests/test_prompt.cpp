#include <doctest.h>

#include "paireval/errors.hpp"
#include "paireval/prompt.hpp"
#include "test_support.hpp"

using namespace paireval;
using test_support::TempDir;
using test_support::make_conversation;

TEST_CASE("load_template reads headers and body") {
    TempDir dir;
    const auto path = dir.write("pair.tpl",
                                "label_first: X\n"
                                "label_second: Y\n"
                                "---\n"
                                "Pick one.\n{conversation_a}\n{conversation_b}\nAnswer:");
    const PromptTemplate tpl = load_template(path, TemplateKind::kPairwise);
    CHECK(tpl.label_first == "X");
    CHECK(tpl.label_second == "Y");
    CHECK(tpl.body.find("{conversation_a}") != std::string::npos);
}

TEST_CASE("pairwise template without {conversation_b} is rejected") {
    TempDir dir;
    const auto path = dir.write("bad.tpl", "---\nOnly {conversation_a} here");
    CHECK_THROWS_WITH_AS(load_template(path, TemplateKind::kPairwise),
                         doctest::Contains("{conversation_b}"), DataError);
}

TEST_CASE("direct template containing a pairwise placeholder is a kind mismatch") {
    TempDir dir;
    const auto path = dir.write("mix.tpl", "---\n{conversation}\n{conversation_a}");
    CHECK_THROWS_AS(load_template(path, TemplateKind::kDirect), DataError);
}

TEST_CASE("duplicate placeholder is rejected") {
    TempDir dir;
    const auto path = dir.write("dup.tpl", "---\n{conversation_a}{conversation_a}{conversation_b}");
    CHECK_THROWS_AS(load_template(path, TemplateKind::kPairwise), DataError);
}

TEST_CASE("equal labels are rejected") {
    TempDir dir;
    const auto path =
        dir.write("labels.tpl", "label_first: Z\nlabel_second: Z\n---\n{conversation_a}{conversation_b}");
    CHECK_THROWS_AS(load_template(path, TemplateKind::kPairwise), DataError);
}

TEST_CASE("render_pair_prompt places conversations under labelled headers") {
    const PromptTemplate tpl = default_pairwise_template();
    const auto c1 = make_conversation("c1", "how are you", "fine thanks");
    const auto c2 = make_conversation("c2", "what time is it", "noon");

    const std::string ab = render_pair_prompt(tpl, c1, c2);
    const std::string ba = render_pair_prompt(tpl, c2, c1);
    CHECK(ab != ba);
    CHECK(ab.find("Conversation A:\nA: how are you\nResponse: fine thanks") != std::string::npos);
    CHECK(ab.find("Conversation B:\nA: what time is it\nResponse: noon") != std::string::npos);
    CHECK(ba.find("Conversation A:\nA: what time is it\nResponse: noon") != std::string::npos);

    // Swapping moves the conversations but changes nothing else.
    CHECK(ab.size() == ba.size());
    CHECK(render_pair_prompt(tpl, c1, c2) == ab);
}

TEST_CASE("substitution is single-pass: placeholder text in conversations survives") {
    const PromptTemplate tpl = default_pairwise_template();
    const auto trap = make_conversation("trap", "try this", "escape {conversation_a} attempt");
    const auto plain = make_conversation("plain", "hello", "world");
    const std::string out = render_pair_prompt(tpl, trap, plain);
    CHECK(out.find("escape {conversation_a} attempt") != std::string::npos);
    // Exactly one expansion of each placeholder happened.
    CHECK(out.find("Conversation A:") != std::string::npos);
    CHECK(out.find("{conversation_b}") == std::string::npos);
}

TEST_CASE("identical conversations fill both slots identically") {
    const PromptTemplate tpl = default_pairwise_template();
    const auto conv = make_conversation("c", "same question", "same answer");
    const std::string out = render_pair_prompt(tpl, conv, conv);
    const std::string rendered = render_conversation(conv);
    CHECK(out.find("Conversation A:\n" + rendered) != std::string::npos);
    CHECK(out.find("Conversation B:\n" + rendered) != std::string::npos);
}

TEST_CASE("default direct prompt ends with the quality question") {
    const PromptTemplate tpl = default_direct_template();
    const auto conv = make_conversation("c", "any history", "any response");
    const std::string out = render_direct_prompt(tpl, conv);
    const std::string question = "Is the above response a good response to the given conversation?";
    REQUIRE(out.size() >= question.size());
    CHECK(out.substr(out.size() - question.size()) == question);
    CHECK(render_direct_prompt(tpl, conv) == out);
}

TEST_CASE("kind mismatches at render time are rejected") {
    const auto conv = make_conversation("c", "h", "r");
    CHECK_THROWS_AS(render_pair_prompt(default_direct_template(), conv, conv), DataError);
    CHECK_THROWS_AS(render_direct_prompt(default_pairwise_template(), conv), DataError);
}

TEST_CASE("missing header separator is an error") {
    TempDir dir;
    const auto path = dir.write("nosep.tpl", "{conversation_a} and {conversation_b}");
    CHECK_THROWS_WITH_AS(load_template(path, TemplateKind::kPairwise), doctest::Contains("---"),
                         DataError);
}

TEST_CASE("shipped template files stay in sync with the embedded defaults") {
    const std::string root = PAIREVAL_SOURCE_DIR;
    const PromptTemplate pair =
        load_template(root + "/templates/pairwise_default.txt", TemplateKind::kPairwise);
    CHECK(pair.body == default_pairwise_template().body);
    CHECK(pair.label_first == "A");
    CHECK(pair.label_second == "B");

    const PromptTemplate direct =
        load_template(root + "/templates/direct_default.txt", TemplateKind::kDirect);
    CHECK(direct.body == default_direct_template().body);
    CHECK(direct.positive_label == "Yes");
    CHECK(direct.negative_label == "No");
}
