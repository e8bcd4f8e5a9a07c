// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "gvqa/backends.hpp"
#include "gvqa/error.hpp"
#include "gvqa/ragcore.hpp"
#include "support.hpp"

#include <cmath>
#include <map>

using namespace gvqa;
using namespace gvqa::ragcore;
using retrieval::KnowledgeDoc;
using retrieval::RetrievalSet;
using retrieval::ScoredDoc;

namespace {

ScoredDoc scored(const std::string& id, const std::string& title, const std::string& text, double prob) {
    ScoredDoc d;
    d.doc.doc_id = id;
    d.doc.title = title;
    d.doc.text = text;
    d.prob = prob;
    return d;
}

RetrievalSet set_of(std::vector<ScoredDoc> docs) {
    RetrievalSet s;
    s.k = docs.size();
    s.docs = std::move(docs);
    return s;
}

/// Scorer from a (candidate, doc_id) -> probability table.
SequenceScorer table_scorer(std::map<std::pair<std::string, std::string>, double> table) {
    return [table = std::move(table)](const std::string& c, const ScoredDoc& d) {
        return std::log(table.at({c, d.doc.doc_id}));
    };
}

}  // namespace

TEST_CASE("golden prompt") {
    const auto docs = set_of({scored("wiki:Hot_dog", "Hot dog", "A hot dog is a sausage\nin a bun.", 0.7),
                              scored("wiki:Ketchup", "Ketchup", "Ketchup is a condiment.", 0.3)});
    const AugmentedPrompt p = render_prompt("What goes on this?", "a hot dog on a plate", "mustard", docs);
    CHECK(p.template_id == "context-image-initial-question/v1");
    CHECK(p.rendered ==
          "Context:\n"
          "Hot dog: A hot dog is a sausage in a bun.\n"
          "Ketchup: Ketchup is a condiment.\n"
          "Image: a hot dog on a plate\n"
          "Initial answer: mustard\n"
          "Question: What goes on this?\n"
          "Answer:");
    CHECK(render(p.parts) == p.rendered);
}

TEST_CASE("empty retrieval gives an empty context block") {
    const AugmentedPrompt p = render_prompt("Why?", "a cat", "sleep", RetrievalSet{});
    CHECK(p.rendered == "Context:\nImage: a cat\nInitial answer: sleep\nQuestion: Why?\nAnswer:");
    CHECK(p.parts.snippets.empty());
}

TEST_CASE("snippets follow probability order and respect the budget") {
    const auto docs = set_of({scored("b", "B", "second", 0.6), scored("a", "A", "first", 0.4)});
    const AugmentedPrompt p = render_prompt("q", "c", "d", docs);
    CHECK(p.rendered.find("B: second") < p.rendered.find("A: first"));

    KnowledgeDoc doc;
    doc.title = "Caf\xC3\xA9";
    doc.text = "long text";
    CHECK(snippet_for(doc, 5) == "Caf\xC3\xA9");
    CHECK(snippet_for(doc, 4) == "Caf");
    CHECK(snippet_for(doc, 300) == "Caf\xC3\xA9: long text");

    const auto swapped = set_of({scored("a", "A", "first", 0.6), scored("b", "B", "second", 0.4)});
    CHECK(render_prompt("q", "c", "d", swapped).rendered != p.rendered);
}

TEST_CASE("marginalization examples") {
    const auto single = set_of({scored("z1", "t", "x", 1.0)});
    auto out = marginalize({"c"}, single, table_scorer({{{"c", "z1"}, 0.4}}));
    REQUIRE(out.size() == 1);
    CHECK(out[0].marginal_prob == doctest::Approx(0.4).epsilon(1e-12));

    const auto uniform = set_of({scored("z1", "t", "x", 0.5), scored("z2", "t", "y", 0.5)});
    out = marginalize({"c"}, uniform, table_scorer({{{"c", "z1"}, 0.2}, {{"c", "z2"}, 0.6}}));
    CHECK(std::abs(out[0].marginal_prob - 0.4) <= 1e-12);
    REQUIRE(out[0].per_doc_logprob.size() == 2);
    CHECK(out[0].per_doc_logprob[0].doc_id == "z1");
    CHECK(out[0].per_doc_logprob[0].logprob == doctest::Approx(std::log(0.2)));

    const auto skewed = set_of({scored("z1", "t", "x", 0.9), scored("z2", "t", "y", 0.1)});
    out = marginalize({"c"}, skewed, table_scorer({{{"c", "z1"}, 0.3}, {{"c", "z2"}, 0.3}}));
    CHECK(std::abs(out[0].marginal_prob - 0.3) <= 1e-12);
}

TEST_CASE("candidates are deduplicated and sorted by marginal then text") {
    const auto docs = set_of({scored("z", "t", "x", 1.0)});
    const auto out = marginalize({"b", "a", "c", "b"}, docs,
                                 table_scorer({{{"a", "z"}, 0.2}, {{"b", "z"}, 0.2}, {{"c", "z"}, 0.5}}));
    REQUIRE(out.size() == 3);
    CHECK(out[0].text == "c");
    CHECK(out[1].text == "a");
    CHECK(out[2].text == "b");
}

TEST_CASE("marginalization errors") {
    CHECK_THROWS_AS(marginalize({"c"}, RetrievalSet{}, table_scorer({})), ValidationError);
    const auto docs = set_of({scored("z", "t", "x", 1.0)});
    try {
        marginalize({"c"}, docs, [](const std::string&, const ScoredDoc&) -> double { throw std::runtime_error("down"); });
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        const std::string what = e.what();
        CHECK(what.find("'c'") != std::string::npos);
        CHECK(what.find("z") != std::string::npos);
    }
}

TEST_CASE("candidate pool") {
    backends::VisionQaResult vqa;
    vqa.draft_answer = "Mustard";
    vqa.answer_distribution = {{"mustard", 0.5}, {"ketchup", 0.3}, {"the relish", 0.1}, {"onion", 0.1}};
    CHECK(candidate_pool("relish", vqa) == std::vector<std::string>{"relish", "Mustard", "ketchup"});
    CHECK(candidate_pool("", vqa, 4) == std::vector<std::string>{"Mustard", "ketchup", "the relish", "onion"});
}

TEST_CASE("answer under the mock: graceful degradation and grid sensitivity") {
    const auto mock = backends::mock_backend(12);
    std::vector<std::uint8_t> px(16 * 16 * 3);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = static_cast<std::uint8_t>(i * 31);
    }
    const imaging::RawImage img(16, 16, px);
    const auto vqa2 = mock->vision_qa(img, imaging::partition(img, 2, 2), "What is this?");
    const auto vqa4 = mock->vision_qa(img, imaging::partition(img, 4, 4), "What is this?");

    const AnswerResult empty = answer("What is this?", vqa2, RetrievalSet{}, *mock);
    CHECK_FALSE(empty.generation.text.empty());
    CHECK(empty.candidates.empty());

    const auto docs = set_of({scored("z1", "One", "first passage", 0.6), scored("z2", "Two", "second passage", 0.4)});
    const AnswerResult two = answer("What is this?", vqa2, docs, *mock);
    const AnswerResult four = answer("What is this?", vqa4, docs, *mock);
    CHECK(two.prompt.rendered != four.prompt.rendered);
    REQUIRE_FALSE(two.candidates.empty());
    CHECK(two.candidates.front().per_doc_logprob.size() == 2);
    for (const auto& c : two.candidates) {
        double lo = 1.0, hi = 0.0;
        for (const auto& lp : c.per_doc_logprob) {
            lo = std::min(lo, std::exp(lp.logprob));
            hi = std::max(hi, std::exp(lp.logprob));
        }
        CHECK(c.marginal_prob >= lo - 1e-12);
        CHECK(c.marginal_prob <= hi + 1e-12);
    }
    // Same inputs, same answer.
    CHECK(answer("What is this?", vqa2, docs, *mock).generation == two.generation);
}
