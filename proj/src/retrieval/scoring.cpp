// SPDX-License-Identifier: Apache-2.0
#include "gvqa/error.hpp"
#include "gvqa/retrieval.hpp"
#include "gvqa/simd/kernels.hpp"
#include "gvqa/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace gvqa::retrieval {
namespace {

constexpr std::array<std::string_view, 48> kStopwords{
    "a", "an", "the", "and", "or", "of", "in", "on", "at", "to", "for", "with", "by", "from", "is", "are",
    "was", "were", "be", "this", "that", "these", "those", "it", "its", "what", "which", "who", "whom", "where",
    "when", "why", "how", "do", "does", "did", "can", "could", "would", "should", "there", "some", "near",
    "into", "over", "under", "his", "her"};

}  // namespace

std::string_view source_name(Source source) noexcept {
    return source == Source::dbpedia ? "dbpedia" : "wikipedia";
}

bool is_stopword(std::string_view w) noexcept {
    return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

std::vector<double> softmax(const std::vector<double>& scores) {
    std::vector<double> probs(scores.size());
    if (scores.empty()) {
        return probs;
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp(scores[i] - peak);
        total += probs[i];
    }
    for (double& p : probs) {
        p /= total;
    }
    return probs;
}

RetrievalSet score_and_rank(const backends::Embedding& query, const std::vector<KnowledgeDoc>& docs, std::size_t k,
                            std::string query_key) {
    if (docs.empty()) {
        throw ValidationError(Stage::retrieval, "score_and_rank needs at least one document");
    }
    if (k == 0) {
        throw ValidationError(Stage::retrieval, "top-k must be >= 1");
    }
    const std::size_t dim = query.dim();
    std::vector<double> rows;
    rows.reserve(docs.size() * dim);
    std::unordered_set<std::string_view> ids;
    for (const KnowledgeDoc& doc : docs) {
        if (doc.embedding.dim() != dim) {
            throw ValidationError(Stage::retrieval, "embedding dim mismatch for " + doc.doc_id + ": " +
                                                        std::to_string(doc.embedding.dim()) + " vs query " +
                                                        std::to_string(dim));
        }
        if (!ids.insert(doc.doc_id).second) {
            throw ValidationError(Stage::retrieval, "duplicate doc_id " + doc.doc_id);
        }
        rows.insert(rows.end(), doc.embedding.values.begin(), doc.embedding.values.end());
    }
    std::vector<double> scores(docs.size());
    simd::dot_rows(rows, query.values, scores);

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = std::min(k, docs.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return docs[a].doc_id < docs[b].doc_id;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
    order.resize(keep);

    std::vector<double> kept_scores;
    kept_scores.reserve(keep);
    for (std::size_t i : order) {
        kept_scores.push_back(scores[i]);
    }
    const std::vector<double> probs = softmax(kept_scores);

    RetrievalSet set;
    set.query_key = std::move(query_key);
    set.k = k;
    for (std::size_t j = 0; j < keep; ++j) {
        set.docs.push_back(ScoredDoc{docs[order[j]], kept_scores[j], probs[j]});
    }
    return set;
}

std::string normalize_query(std::string_view query) {
    return text::collapse_whitespace(text::to_lower(query));
}

std::string build_query(std::string_view question, std::string_view draft_answer, std::string_view caption) {
    std::string query = normalize_query(question);
    std::unordered_set<std::string> present;
    for (std::string_view w : text::split_words(query)) {
        present.insert(std::string(text::strip_punct(w)));
    }
    auto append = [&](std::string_view source, bool salient_only) {
        const std::string lowered = text::to_lower(source);
        for (std::string_view w : text::split_words(lowered)) {
            const std::string key(text::strip_punct(w));
            if (key.empty() || (salient_only && is_stopword(key)) || !present.insert(key).second) {
                continue;
            }
            if (!query.empty()) {
                query.push_back(' ');
            }
            query.append(w);
        }
    };
    append(draft_answer, false);
    append(caption, true);
    return query;
}

std::vector<std::string> detect_entity_labels(std::string_view question, std::string_view caption,
                                              std::string_view draft_answer, std::size_t max_labels) {
    std::vector<std::string> labels;
    auto add = [&](std::string label) {
        if (!label.empty() && labels.size() < max_labels &&
            std::find(labels.begin(), labels.end(), label) == labels.end()) {
            labels.push_back(std::move(label));
        }
    };
    for (std::string_view source : {question, caption}) {
        std::string run;
        bool first = true;
        for (std::string_view raw : text::split_words(source)) {
            const std::string_view w = text::strip_punct(raw);
            const bool capitalized = !w.empty() && std::isupper(static_cast<unsigned char>(w.front()));
            const bool skip = first;
            first = false;
            if (capitalized && !skip && !(w.size() == 1 && w == "I")) {
                if (!run.empty()) {
                    run.push_back(' ');
                }
                run.append(w);
            } else {
                add(std::move(run));
                run.clear();
            }
            // A run also ends at clause punctuation.
            if (!raw.empty() && std::ispunct(static_cast<unsigned char>(raw.back()))) {
                add(std::move(run));
                run.clear();
            }
        }
        add(std::move(run));
    }
    if (labels.empty()) {
        std::string fallback = text::collapse_whitespace(draft_answer);
        if (!fallback.empty()) {
            fallback.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(fallback.front())));
            add(std::move(fallback));
        }
    }
    return labels;
}

}  // namespace gvqa::retrieval
