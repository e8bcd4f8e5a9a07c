// SPDX-License-Identifier: Apache-2.0
#include "gvqa/ragcore.hpp"

#include "gvqa/dataset.hpp"
#include "gvqa/error.hpp"
#include "gvqa/text.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace gvqa::ragcore {

std::string snippet_for(const retrieval::KnowledgeDoc& doc, std::size_t budget) {
    const std::string line = text::collapse_whitespace(doc.title + ": " + doc.text);
    return std::string(text::utf8_prefix(line, budget));
}

std::string render(const PromptParts& parts) {
    std::string out = "Context:\n";
    for (const std::string& s : parts.snippets) {
        out += s;
        out += '\n';
    }
    out += "Image: " + parts.caption + "\n";
    out += "Initial answer: " + parts.draft_answer + "\n";
    out += "Question: " + parts.question + "\n";
    out += "Answer:";
    return out;
}

AugmentedPrompt render_prompt(std::string_view question, std::string_view caption, std::string_view draft_answer,
                              const retrieval::RetrievalSet& docs, std::size_t snippet_chars) {
    if (text::trim(question).empty()) {
        throw ValidationError(Stage::ragcore, "prompt requires a non-empty question");
    }
    PromptParts parts{std::string(question), std::string(caption), std::string(draft_answer), {}};
    for (const retrieval::ScoredDoc& d : docs.docs) {
        parts.snippets.push_back(snippet_for(d.doc, snippet_chars));
    }
    AugmentedPrompt prompt{std::string(kTemplateId), render(parts), std::move(parts)};
    return prompt;
}

std::vector<AnswerCandidate> marginalize(const std::vector<std::string>& candidates,
                                         const retrieval::RetrievalSet& retrieval, const SequenceScorer& scorer) {
    if (retrieval.docs.empty()) {
        throw ValidationError(Stage::ragcore, "marginalize requires a non-empty retrieval set");
    }
    std::vector<AnswerCandidate> out;
    std::unordered_set<std::string> seen;
    for (const std::string& text : candidates) {
        if (!seen.insert(text).second) {
            continue;
        }
        AnswerCandidate candidate{text, {}, 0.0};
        for (const retrieval::ScoredDoc& doc : retrieval.docs) {
            double lp = 0.0;
            try {
                lp = scorer(text, doc);
            } catch (const std::exception& e) {
                throw BackendError("scoring candidate '" + text + "' under " + doc.doc.doc_id + " failed: " + e.what(),
                                   false);
            }
            candidate.per_doc_logprob.push_back({doc.doc.doc_id, lp});
            candidate.marginal_prob += doc.prob * std::exp(lp);
        }
        candidate.marginal_prob = std::clamp(candidate.marginal_prob, 0.0, 1.0);
        out.push_back(std::move(candidate));
    }
    std::stable_sort(out.begin(), out.end(), [](const AnswerCandidate& a, const AnswerCandidate& b) {
        return a.marginal_prob != b.marginal_prob ? a.marginal_prob > b.marginal_prob : a.text < b.text;
    });
    return out;
}

SequenceScorer generator_scorer(const backends::Backend& generator, const PromptParts& base, std::size_t snippet_chars) {
    return [&generator, base, snippet_chars](const std::string& candidate, const retrieval::ScoredDoc& doc) {
        PromptParts parts = base;
        parts.snippets = {snippet_for(doc.doc, snippet_chars)};
        return generator.sequence_logprob(render(parts), candidate);
    };
}

std::vector<std::string> candidate_pool(std::string_view final_answer, const backends::VisionQaResult& vqa,
                                        std::size_t top_answers) {
    std::vector<std::string> pool;
    std::unordered_set<std::string> seen;
    auto add = [&](std::string_view c) {
        const std::string key = dataset::normalize_answer(c);
        if (!key.empty() && seen.insert(key).second) {
            pool.emplace_back(text::trim(c));
        }
    };
    add(final_answer);
    add(vqa.draft_answer);
    std::vector<backends::AnswerProb> dist = vqa.answer_distribution;
    std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) { return a.prob > b.prob; });
    for (std::size_t i = 0; i < dist.size() && i < top_answers; ++i) {
        add(dist[i].answer);
    }
    return pool;
}

AnswerResult answer(std::string_view question, const backends::VisionQaResult& vqa,
                    const retrieval::RetrievalSet& retrieval, const backends::Backend& generator,
                    std::size_t snippet_chars, std::size_t max_tokens) {
    AnswerResult result;
    result.prompt = render_prompt(question, vqa.caption, vqa.draft_answer, retrieval, snippet_chars);
    result.generation = generator.generate(result.prompt.rendered, max_tokens);
    if (!retrieval.empty()) {
        result.candidates = marginalize(candidate_pool(result.generation.text, vqa), retrieval,
                                        generator_scorer(generator, result.prompt.parts, snippet_chars));
    }
    return result;
}

}  // namespace gvqa::ragcore
