// SPDX-License-Identifier: Apache-2.0
#include "gvqa/guardrails.hpp"

#include "gvqa/error.hpp"
#include "gvqa/simd/kernels.hpp"
#include "gvqa/text.hpp"

#include <algorithm>
#include <cmath>

namespace gvqa::guardrails {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError(Stage::guardrails, "cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                                     std::to_string(b.size()) + ")");
    }
    const double na = simd::squared_norm(a);
    const double nb = simd::squared_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw ValidationError(Stage::guardrails, "cosine: zero-norm input");
    }
    const double c = simd::dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine(const backends::Embedding& a, const backends::Embedding& b) {
    return cosine(a.view(), b.view());
}

ConfidenceScore confidence(const backends::VisionQaResult& vqa, const retrieval::RetrievalSet& retrieval,
                           const backends::GenerationResult& generation, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError(Stage::guardrails, "alpha must lie in [0, 1]");
    }
    ConfidenceScore score;
    for (const auto& entry : vqa.answer_distribution) {
        score.s_visual = std::max(score.s_visual, entry.prob);
    }
    score.s_textual = std::clamp(generation.geometric_mean_prob(), 0.0, 1.0);
    score.degraded = retrieval.empty();
    score.s_fused = score.degraded ? 0.0 : std::clamp(retrieval.max_prob(), 0.0, 1.0);
    score.s_combined = alpha == 1.0 ? score.s_fused
                                    : std::clamp(alpha * score.s_fused + (1.0 - alpha) * score.s_textual, 0.0, 1.0);
    return score;
}

GateDecision gate(double score, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValidationError(Stage::guardrails, "lambda must lie in [0, 1]");
    }
    return GateDecision{score >= lambda ? dataset::Split::id : dataset::Split::ood, lambda, score};
}

GateDecision gate(const ConfidenceScore& score, double lambda) {
    return gate(score.s_combined, lambda);
}

GroundingReport grounding_from_embeddings(const backends::Embedding& prediction,
                                          std::span<const backends::Embedding> ground_truths, double tau) {
    if (ground_truths.empty()) {
        throw ValidationError(Stage::guardrails, "grounding needs at least one ground-truth answer");
    }
    if (!(tau > -1.0 && tau < 1.0)) {
        throw ValidationError(Stage::guardrails, "tau must lie in (-1, 1)");
    }
    GroundingReport report;
    report.tau = tau;
    double sum = 0.0;
    for (const backends::Embedding& gt : ground_truths) {
        const double c = cosine(prediction, gt);
        report.per_gt_cosines.push_back(c);
        sum += c;
    }
    report.g_mean = sum / static_cast<double>(ground_truths.size());
    report.hallucinated = report.g_mean < tau;
    return report;
}

GroundingReport grounding_score(std::string_view prediction, std::span<const std::string> gt_answers,
                                const backends::Backend& embedder, double tau) {
    auto embed = [&](std::string_view raw) {
        std::string normalized = dataset::normalize_answer(raw);
        if (normalized.empty()) {
            normalized = std::string(text::trim(raw));
        }
        if (normalized.empty()) {
            normalized = "<empty>";
        }
        return embedder.embed_text(normalized);
    };
    const backends::Embedding pred = embed(prediction);
    std::vector<backends::Embedding> gts;
    gts.reserve(gt_answers.size());
    for (const std::string& gt : gt_answers) {
        gts.push_back(embed(gt));
    }
    return grounding_from_embeddings(pred, gts, tau);
}

}  // namespace gvqa::guardrails
