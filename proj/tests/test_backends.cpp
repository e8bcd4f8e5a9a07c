// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "gvqa/backends.hpp"
#include "gvqa/error.hpp"
#include "gvqa/text.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace gvqa;
using namespace gvqa::backends;

namespace {

imaging::RawImage gradient(std::uint32_t w, std::uint32_t h, std::uint8_t salt) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<std::uint8_t>(i * 7 + salt);
    }
    return imaging::RawImage(w, h, std::move(data));
}

double distribution_sum(const VisionQaResult& r) {
    double total = 0.0;
    for (const auto& a : r.answer_distribution) {
        total += a.prob;
    }
    return total;
}

}  // namespace

TEST_CASE("equal seeds behave identically, different seeds differ") {
    const auto a = mock_backend(5);
    const auto b = mock_backend(5);
    const auto c = mock_backend(6);
    const auto img = gradient(16, 12, 3);
    const auto grid = imaging::partition(img, 2, 2);
    CHECK(a->vision_qa(img, grid, "What is this?") == b->vision_qa(img, grid, "What is this?"));
    CHECK(a->generate("Question: why?\nAnswer:", 4) == b->generate("Question: why?\nAnswer:", 4));
    CHECK(a->embed_text("hot dog") == b->embed_text("hot dog"));
    CHECK(a->embed_text("hot dog") != c->embed_text("hot dog"));
}

TEST_CASE("answer distributions are normalized on random inputs") {
    const auto mock = mock_backend(1);
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> side(2, 20);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto img = gradient(static_cast<std::uint32_t>(side(rng)), static_cast<std::uint32_t>(side(rng)),
                                  static_cast<std::uint8_t>(trial));
        const auto grid = imaging::partition(img, 2, 2);
        const auto r = mock->vision_qa(img, grid, "question number " + std::to_string(trial) + "?");
        CHECK(std::abs(distribution_sum(r) - 1.0) <= 1e-6);
        for (const auto& a : r.answer_distribution) {
            CHECK(a.prob >= 0.0);
            CHECK(a.prob <= 1.0);
        }
        CHECK(r.joint_embedding.dim() == kDefaultEmbeddingDim);
        CHECK_NOTHROW(check_vision_result(r, kDefaultEmbeddingDim));
    }
}

TEST_CASE("the draft answer is the most probable answer") {
    const auto mock = mock_backend(2);
    const auto img = gradient(8, 8, 1);
    const auto r = mock->vision_qa(img, imaging::partition(img, 2, 2), "What sport is this?");
    REQUIRE_FALSE(r.answer_distribution.empty());
    const auto best = std::max_element(r.answer_distribution.begin(), r.answer_distribution.end(),
                                       [](const AnswerProb& x, const AnswerProb& y) { return x.prob < y.prob; });
    CHECK(best->answer == r.draft_answer);
}

TEST_CASE("the grid reaches the vision backend") {
    const auto mock = mock_backend(3);
    const auto img = gradient(16, 16, 9);
    const auto two = mock->vision_qa(img, imaging::partition(img, 2, 2), "What is shown?");
    const auto four = mock->vision_qa(img, imaging::partition(img, 4, 4), "What is shown?");
    CHECK(two.caption != four.caption);
}

TEST_CASE("generation contract") {
    const auto mock = mock_backend(4);
    const auto g = mock->generate("Context:\nQuestion: what?\nAnswer:", 8);
    CHECK_FALSE(g.text.empty());
    CHECK(g.token_logprobs.size() == text::split_words(g.text).size());
    for (double lp : g.token_logprobs) {
        CHECK(lp <= 0.0);
    }
    const double mean = std::accumulate(g.token_logprobs.begin(), g.token_logprobs.end(), 0.0) /
                        static_cast<double>(g.token_logprobs.size());
    CHECK(g.geometric_mean_prob() == doctest::Approx(std::exp(mean)).epsilon(1e-12));

    const auto one = mock->generate("Question: anything\nAnswer:", 1);
    CHECK(one.token_logprobs.size() == 1);
    CHECK(text::split_words(one.text).size() == 1);
    CHECK_THROWS_AS(mock->generate("", 3), ValidationError);
    CHECK_THROWS_AS(mock->generate("x", 0), ValidationError);
}

TEST_CASE("sequence score of the greedy text includes the end-of-sequence term") {
    const auto mock = mock_backend(8);
    const std::string prompt = "Context:\nImage: a dog\nInitial answer: frisbee\nQuestion: what game?\nAnswer:";
    const auto g = mock->generate(prompt, 8);
    const double tokens = std::accumulate(g.token_logprobs.begin(), g.token_logprobs.end(), 0.0);
    const double whole = mock->sequence_logprob(prompt, g.text);
    CHECK(std::isfinite(whole));
    CHECK(whole < tokens);
    CHECK(mock->sequence_logprob(prompt, g.text) == whole);
    CHECK(mock->sequence_logprob(prompt, "") == -std::numeric_limits<double>::infinity());
}

TEST_CASE("embeddings are unit-norm and separate distinct strings") {
    const auto mock = mock_backend(9, {64, {}});
    const auto cat = mock->embed_text("cat");
    const auto dog = mock->embed_text("dog");
    CHECK(cat.dim() == 64);
    CHECK(std::abs(cat.norm() - 1.0) <= 1e-6);
    CHECK(std::abs(dog.norm() - 1.0) <= 1e-6);
    CHECK(cat != dog);
    CHECK(mock->embed_text("x") == mock->embed_text("x"));
    CHECK_THROWS_AS(mock->embed_text(""), ValidationError);
}

TEST_CASE("mock embedding matches recorded values") {
    const auto e = mock_backend(0, {8, {}})->embed_text("motocross");
    const long long golden[8] = {-20207135, 306048258, 333402413, -449889101, -157067458, -468591810, -11359747, -589907830};
    REQUIRE(e.dim() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::llround(e.values[i] * 1e9) == golden[i]);
    }
}

TEST_CASE("contract checks reject malformed results") {
    VisionQaResult r;
    r.draft_answer = "a";
    r.caption = "c";
    r.joint_embedding = normalized({1.0, 0.0});
    r.answer_distribution = {{"a", 0.7}, {"b", 0.2}};
    CHECK_THROWS_AS(check_vision_result(r, 2), ProtocolError);
    r.answer_distribution = {{"a", 0.7}, {"b", 0.3}};
    CHECK_NOTHROW(check_vision_result(r, 2));
    CHECK_THROWS_AS(check_vision_result(r, 3), ProtocolError);

    CHECK_THROWS_AS(check_generation({"two words", {-0.1}}), ProtocolError);
    CHECK_THROWS_AS(check_generation({"word", {0.2}}), ProtocolError);
    CHECK_NOTHROW(check_generation({"two words", {-0.1, -2.0}}));

    CHECK_THROWS_AS(check_unit_embedding(Embedding{{0.5, 0.5}}, 2), ProtocolError);
    CHECK_THROWS_AS(normalized({0.0, 0.0}), ValidationError);
}

TEST_CASE("descriptor validation") {
    BackendDescriptor d;
    CHECK_NOTHROW(validate(d));
    d.kind = BackendKind::remote;
    CHECK_THROWS_AS(validate(d), ValidationError);
    d.endpoint = "http://localhost:8080";
    CHECK_NOTHROW(validate(d));
    d.embedding_dim = 0;
    CHECK_THROWS_AS(validate(d), ValidationError);
}
