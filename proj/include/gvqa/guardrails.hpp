// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvqa/backends.hpp"
#include "gvqa/dataset.hpp"
#include "gvqa/retrieval.hpp"

namespace gvqa::guardrails {

inline constexpr double kDefaultTau = 0.5;
inline constexpr double kDefaultLambda = 0.5;
inline constexpr double kDefaultAlpha = 0.5;

/// Cosine similarity clamped to [-1, 1]. Throws ValidationError on a zero-norm
/// input or a dimension mismatch; never returns a silent 0.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const backends::Embedding& a, const backends::Embedding& b);

struct ConfidenceScore {
    double s_fused = 0.0;     ///< max retrieval probability
    double s_visual = 0.0;    ///< max answer probability from the vision model
    double s_textual = 0.0;   ///< geometric-mean token probability
    double s_combined = 0.0;  ///< alpha * s_fused + (1 - alpha) * s_textual, gated against lambda
    bool degraded = false;    ///< retrieval was empty

    bool operator==(const ConfidenceScore&) const = default;
};

ConfidenceScore confidence(const backends::VisionQaResult& vqa, const retrieval::RetrievalSet& retrieval,
                           const backends::GenerationResult& generation, double alpha = kDefaultAlpha);

struct GateDecision {
    dataset::Split label = dataset::Split::id;
    double threshold = kDefaultLambda;
    double score = 0.0;

    bool operator==(const GateDecision&) const = default;
};

/// ID iff score >= lambda (inclusive).
GateDecision gate(const ConfidenceScore& score, double lambda = kDefaultLambda);
GateDecision gate(double score, double lambda);

struct GroundingReport {
    double g_mean = 0.0;
    std::vector<double> per_gt_cosines;
    double tau = kDefaultTau;
    bool hallucinated = false;  ///< g_mean < tau (strict)

    bool operator==(const GroundingReport&) const = default;
};

/// Mean cosine between the prediction and each ground truth, from embeddings.
GroundingReport grounding_from_embeddings(const backends::Embedding& prediction,
                                          std::span<const backends::Embedding> ground_truths, double tau);

/// Embeds the prediction and every normalized ground-truth answer with
/// `embedder`, then scores them. A prediction that normalizes to nothing is
/// embedded verbatim.
GroundingReport grounding_score(std::string_view prediction, std::span<const std::string> gt_answers,
                                const backends::Backend& embedder, double tau = kDefaultTau);

}  // namespace gvqa::guardrails
