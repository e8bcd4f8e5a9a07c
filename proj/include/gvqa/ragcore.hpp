// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gvqa/backends.hpp"
#include "gvqa/retrieval.hpp"

namespace gvqa::ragcore {

inline constexpr std::string_view kTemplateId = "context-image-initial-question/v1";
inline constexpr std::size_t kDefaultSnippetChars = 300;

struct PromptParts {
    std::string question;
    std::string caption;
    std::string draft_answer;
    std::vector<std::string> snippets;  ///< prob-descending, already truncated

    bool operator==(const PromptParts&) const = default;
};

struct AugmentedPrompt {
    std::string template_id;
    std::string rendered;
    PromptParts parts;
};

/// "Title: text" squashed onto one line and cut to `budget` bytes (UTF-8 safe).
std::string snippet_for(const retrieval::KnowledgeDoc& doc, std::size_t budget);

/// Context:\n<one snippet per line>Image: <caption>\nInitial answer: <draft>\nQuestion: <question>\nAnswer:
AugmentedPrompt render_prompt(std::string_view question, std::string_view caption, std::string_view draft_answer,
                              const retrieval::RetrievalSet& docs, std::size_t snippet_chars = kDefaultSnippetChars);

std::string render(const PromptParts& parts);

struct DocLogprob {
    std::string doc_id;
    double logprob = 0.0;

    bool operator==(const DocLogprob&) const = default;
};

struct AnswerCandidate {
    std::string text;
    std::vector<DocLogprob> per_doc_logprob;  ///< retrieval order
    double marginal_prob = 0.0;

    bool operator==(const AnswerCandidate&) const = default;
};

/// log P(candidate | doc-conditioned context).
using SequenceScorer = std::function<double(const std::string& candidate, const retrieval::ScoredDoc& doc)>;

/// Sequence-level RAG mixture: marginal(c) = sum_z p(z) * exp(logP(c | z)).
/// Candidates are deduplicated (first occurrence kept) and returned sorted by
/// marginal descending, ties by text ascending. Throws ValidationError for an
/// empty retrieval set; scorer failures are rethrown as BackendError naming
/// the (candidate, doc) pair.
std::vector<AnswerCandidate> marginalize(const std::vector<std::string>& candidates,
                                         const retrieval::RetrievalSet& retrieval, const SequenceScorer& scorer);

/// Scorer backed by a generator: the doc-conditioned context is the prompt
/// rendered with that single doc.
SequenceScorer generator_scorer(const backends::Backend& generator, const PromptParts& base,
                                std::size_t snippet_chars = kDefaultSnippetChars);

/// Candidate pool: final answer, draft answer, then the top answers of the
/// vision distribution; empty and repeated (after normalization) entries dropped.
std::vector<std::string> candidate_pool(std::string_view final_answer, const backends::VisionQaResult& vqa,
                                        std::size_t top_answers = 3);

struct AnswerResult {
    AugmentedPrompt prompt;
    backends::GenerationResult generation;
    std::vector<AnswerCandidate> candidates;  ///< empty when retrieval is empty
};

inline constexpr std::size_t kDefaultMaxAnswerTokens = 8;

/// Greedy answer from the merged-context prompt, plus the mixture over
/// per-doc contexts for the candidate pool.
AnswerResult answer(std::string_view question, const backends::VisionQaResult& vqa,
                    const retrieval::RetrievalSet& retrieval, const backends::Backend& generator,
                    std::size_t snippet_chars = kDefaultSnippetChars,
                    std::size_t max_tokens = kDefaultMaxAnswerTokens);

}  // namespace gvqa::ragcore
