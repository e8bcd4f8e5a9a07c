// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "gvqa/cache.hpp"
#include "gvqa/error.hpp"
#include "gvqa/knowledge.hpp"
#include "gvqa/retrieval.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace gvqa;
using namespace gvqa::retrieval;
using gvqa::testing::TempDir;

namespace {

/// Docs whose dot product with the query e0 equals the given scores.
std::vector<KnowledgeDoc> docs_with_scores(const std::vector<double>& scores) {
    std::vector<KnowledgeDoc> docs;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        KnowledgeDoc d;
        d.doc_id = "doc" + std::to_string(i);
        d.title = d.doc_id;
        d.text = "text";
        d.embedding.values = {scores[i], 1.0};
        docs.push_back(d);
    }
    return docs;
}

const backends::Embedding kAxis{{1.0, 0.0}};

}  // namespace

TEST_CASE("softmax examples") {
    const auto equal = score_and_rank(kAxis, docs_with_scores({0.3, 0.3, 0.3}), 3);
    REQUIRE(equal.docs.size() == 3);
    for (const auto& d : equal.docs) {
        CHECK(d.prob == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    CHECK(equal.docs[0].doc.doc_id == "doc0");
    CHECK(equal.docs[2].doc.doc_id == "doc2");

    const auto two = score_and_rank(kAxis, docs_with_scores({std::log(2.0), 0.0}), 2);
    CHECK(std::abs(two.docs[0].prob - 2.0 / 3.0) <= 1e-9);
    CHECK(std::abs(two.docs[1].prob - 1.0 / 3.0) <= 1e-9);
    CHECK(two.docs[0].raw_score == doctest::Approx(std::log(2.0)));

    const auto top1 = score_and_rank(kAxis, docs_with_scores({1.0, 2.0, 3.0}), 1);
    REQUIRE(top1.docs.size() == 1);
    CHECK(top1.docs[0].doc.doc_id == "doc2");
    CHECK(top1.docs[0].prob == 1.0);
    CHECK(top1.max_prob() == 1.0);
}

TEST_CASE("softmax is stable for large scores") {
    const auto probs = softmax({1000.0, 999.0, -1000.0});
    CHECK(std::isfinite(probs[0]));
    CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) <= 1e-12);
    CHECK(probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("score_and_rank preconditions") {
    CHECK_THROWS_AS(score_and_rank(kAxis, {}, 3), ValidationError);
    CHECK_THROWS_AS(score_and_rank(kAxis, docs_with_scores({1.0}), 0), ValidationError);
    auto dup = docs_with_scores({1.0, 2.0});
    dup[1].doc_id = dup[0].doc_id;
    CHECK_THROWS_AS(score_and_rank(kAxis, dup, 2), ValidationError);
    auto mismatched = docs_with_scores({1.0, 2.0});
    mismatched[1].embedding.values.push_back(0.0);
    CHECK_THROWS_AS(score_and_rank(kAxis, mismatched, 2), ValidationError);
    try {
        score_and_rank(kAxis, mismatched, 2);
    } catch (const Error& e) {
        CHECK(e.stage() == Stage::retrieval);
    }
}

TEST_CASE("k larger than the pool keeps everything") {
    const auto set = score_and_rank(kAxis, docs_with_scores({0.1, 0.5}), 10, "q");
    CHECK(set.docs.size() == 2);
    CHECK(set.k == 10);
    CHECK(set.query_key == "q");
}

TEST_CASE("query building") {
    CHECK(build_query("what sport?", "motocross", "a motorcycle in dirt") == "what sport? motocross motorcycle dirt");
    CHECK(build_query("  What   Sport? ", "", "") == "what sport?");
    CHECK(build_query("What color is the bus?", "Red", "a red bus on a street") == "what color is the bus? red street");
    CHECK(build_query("q?", "a b", "c") == build_query("q?", "a b", "c"));
    CHECK(normalize_query("  Hot   DOG\tcondiments ") == "hot dog condiments");
}

TEST_CASE("entity labels") {
    CHECK(detect_entity_labels("In which city is Big Ben located?", "", "") == std::vector<std::string>{"Big Ben"});
    CHECK(detect_entity_labels("Who made this?", "a Honda motorcycle near New York", "") ==
          std::vector<std::string>{"Honda", "New York"});
    CHECK(detect_entity_labels("What sport is this?", "a man riding", "motocross") ==
          std::vector<std::string>{"Motocross"});
    CHECK(detect_entity_labels("what?", "", "").empty());
    CHECK(detect_entity_labels("Is Paris near Rome, Italy?", "", "", 2).size() == 2);
}

TEST_CASE("SPARQL goldens") {
    const std::string head = "SELECT ?abstract WHERE { ?s rdfs:label \"";
    const std::string tail = "\"@en ; dbo:abstract ?abstract . FILTER (lang(?abstract) = 'en') } LIMIT 1";
    CHECK(dbpedia_sparql("Pizza") == head + "Pizza" + tail);
    CHECK(dbpedia_sparql("Big Ben") == head + "Big Ben" + tail);
    CHECK(dbpedia_sparql("The \"Boss\"") == head + "The \\\"Boss\\\"" + tail);
    CHECK(dbpedia_sparql("AC\\DC") == head + "AC\\\\DC" + tail);
    CHECK(dbpedia_sparql("Line\tTab") == head + "Line\\tTab" + tail);
    CHECK(dbpedia_sparql("Caf\xC3\xA9") == head + "Caf\xC3\xA9" + tail);
    CHECK_THROWS_AS(dbpedia_sparql(""), ValidationError);
    CHECK_THROWS_AS(dbpedia_sparql(std::string("bell\x07")), ValidationError);
    CHECK_THROWS_AS(dbpedia_sparql(std::string("nul\0x", 5)), ValidationError);
}

TEST_CASE("endpoint URLs") {
    const Endpoints ep;
    CHECK(wikipedia_summary_url(ep, "Hot dog") == "https://en.wikipedia.org/api/rest_v1/page/summary/Hot_dog");
    const std::string search = wikipedia_search_url(ep, "hot dog condiments", 5);
    CHECK(search.rfind("https://en.wikipedia.org/w/api.php?", 0) == 0);
    CHECK(net::query_param(search, "srsearch") == "hot dog condiments");
    CHECK(net::query_param(search, "srlimit") == "5");
    CHECK(net::query_param(search, "list") == "search");
    const std::string sparql = dbpedia_query_url(ep, dbpedia_sparql("Pizza"));
    CHECK(net::query_param(sparql, "query") == dbpedia_sparql("Pizza"));
}

TEST_CASE("disk cache round trip, misses, corruption and size cap") {
    TempDir dir("cache");
    DiskCache cache(dir.path(), 64);
    CHECK_FALSE(cache.get("wikipedia-search", "hot dog"));
    const auto stored = cache.put("wikipedia-search", "hot dog", std::string("{\"a\":\x01\"}"), 200);
    REQUIRE(stored);
    const auto hit = cache.get("wikipedia-search", "hot dog");
    REQUIRE(hit);
    CHECK(hit->payload == std::string("{\"a\":\x01\"}"));
    CHECK(hit->status == 200);
    CHECK(hit->source == "wikipedia-search");
    CHECK(hit->key == "hot dog");
    CHECK_FALSE(hit->fetched_at.empty());

    // Survives a new instance (process restart).
    CHECK(DiskCache(dir.path(), 64).get("wikipedia-search", "hot dog") == hit);
    // Source is part of the key.
    CHECK_FALSE(cache.get("wikipedia-summary", "hot dog"));
    CHECK(cache.record_path("a", "b") != cache.record_path("a", "c"));

    CHECK_FALSE(cache.put("s", "big", std::string(65, 'x')));
    CHECK_FALSE(cache.get("s", "big"));

    gvqa::testing::spit(cache.record_path("wikipedia-search", "hot dog"), "{truncated");
    CHECK_FALSE(cache.get("wikipedia-search", "hot dog"));
}

TEST_CASE("softmax property sweep against brute force") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> len(2, 50);
    for (int trial = 0; trial < 200; ++trial) {
        const auto scores = gvqa::testing::random_vector(rng, static_cast<std::size_t>(len(rng)), -5.0, 5.0);
        const std::size_t k = std::max<std::size_t>(1, scores.size() / 2);
        const auto set = score_and_rank(kAxis, docs_with_scores(scores), k);
        double total = 0.0;
        for (const auto& d : set.docs) {
            total += d.prob;
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        for (std::size_t i = 0; i < set.docs.size(); ++i) {
            CHECK(set.docs[i].raw_score == doctest::Approx(scores[order[i]]).epsilon(1e-12));
        }
    }
}
