// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gvqa/backends.hpp"

namespace gvqa::retrieval {

enum class Source { wikipedia, dbpedia };

std::string_view source_name(Source source) noexcept;

struct KnowledgeDoc {
    std::string doc_id;  ///< source-qualified, e.g. "wiki:Hot_dog"
    Source source = Source::wikipedia;
    std::string title;
    std::string text;
    backends::Embedding embedding;

    bool operator==(const KnowledgeDoc&) const = default;
};

struct ScoredDoc {
    KnowledgeDoc doc;
    double raw_score = 0.0;  ///< dot(doc embedding, query embedding)
    double prob = 0.0;       ///< softmax over the selected top-k raw scores

    bool operator==(const ScoredDoc&) const = default;
};

/// Top-k documents, prob descending, ties by doc_id ascending.
struct RetrievalSet {
    std::string query_key;
    std::vector<ScoredDoc> docs;
    std::size_t k = 0;

    bool empty() const noexcept { return docs.empty(); }
    double max_prob() const noexcept { return docs.empty() ? 0.0 : docs.front().prob; }

    bool operator==(const RetrievalSet&) const = default;
};

/// Scores every doc by its dot product with the query (batched SIMD kernel),
/// keeps the k best (ties by doc_id), and softmax-normalizes the survivors
/// with max subtraction. Throws ValidationError on empty input, k == 0,
/// duplicate doc ids, or mismatched dimensions.
RetrievalSet score_and_rank(const backends::Embedding& query_embedding, const std::vector<KnowledgeDoc>& docs,
                            std::size_t k, std::string query_key = {});

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(const std::vector<double>& scores);

/// Lowercase question, then draft-answer words, then caption words that are
/// not stopwords; words already present are skipped.
std::string build_query(std::string_view question, std::string_view draft_answer, std::string_view caption);

/// Cache-key form of a query: lowercase, trimmed, whitespace collapsed.
std::string normalize_query(std::string_view query);

/// Heuristic entity labels for the DBpedia lookup: runs of capitalized words
/// in the question and caption; the sentence-initial word never counts.
/// Falls back to the capitalized draft answer when nothing is found.
std::vector<std::string> detect_entity_labels(std::string_view question, std::string_view caption,
                                              std::string_view draft_answer, std::size_t max_labels = 2);

bool is_stopword(std::string_view lowercase_word) noexcept;

}  // namespace gvqa::retrieval
