// SPDX-License-Identifier: Apache-2.0
#include "gvqa/backends.hpp"

#include "gvqa/error.hpp"
#include "gvqa/net/transport.hpp"
#include "gvqa/simd/kernels.hpp"
#include "gvqa/text.hpp"

#include <cmath>
#include <numeric>

namespace gvqa::backends {

double Embedding::norm() const noexcept {
    return std::sqrt(simd::squared_norm(values));
}

Embedding normalized(std::vector<double> values) {
    const double sq = simd::squared_norm(values);
    if (!(sq > 0.0) || !std::isfinite(sq)) {
        throw ValidationError(Stage::backend, "cannot normalize a zero or non-finite vector");
    }
    simd::scale(1.0 / std::sqrt(sq), values);
    return Embedding{std::move(values)};
}

double GenerationResult::geometric_mean_prob() const noexcept {
    if (token_logprobs.empty()) {
        return 0.0;
    }
    const double sum = std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
    return std::exp(sum / static_cast<double>(token_logprobs.size()));
}

void validate(const BackendDescriptor& descriptor) {
    if (descriptor.embedding_dim == 0) {
        throw ValidationError(Stage::config, "backend.embedding_dim must be >= 1");
    }
    if (descriptor.kind == BackendKind::remote && net::url_origin(descriptor.endpoint).empty()) {
        throw ValidationError(Stage::config, "backend.endpoint must be an http(s) URL, got '" + descriptor.endpoint + "'");
    }
}

void check_unit_embedding(const Embedding& embedding, std::size_t dim) {
    if (embedding.dim() != dim) {
        throw ProtocolError("embedding has dim " + std::to_string(embedding.dim()) + ", expected " + std::to_string(dim));
    }
    for (double v : embedding.values) {
        if (!std::isfinite(v)) {
            throw ProtocolError("embedding contains a non-finite value");
        }
    }
    if (std::abs(embedding.norm() - 1.0) > 1e-6) {
        throw ProtocolError("embedding is not unit-normalized");
    }
}

void check_vision_result(const VisionQaResult& result, std::size_t dim) {
    if (result.joint_embedding.dim() != dim) {
        throw ProtocolError("joint_embedding has dim " + std::to_string(result.joint_embedding.dim()) +
                            ", expected " + std::to_string(dim));
    }
    double total = 0.0;
    for (const AnswerProb& entry : result.answer_distribution) {
        if (!(entry.prob >= 0.0 && entry.prob <= 1.0)) {
            throw ProtocolError("answer_distribution probability outside [0,1]");
        }
        total += entry.prob;
    }
    if (result.answer_distribution.empty() || std::abs(total - 1.0) > 1e-6) {
        throw ProtocolError("answer_distribution does not sum to 1");
    }
}

void check_generation(const GenerationResult& result) {
    for (double lp : result.token_logprobs) {
        if (!(lp <= 0.0)) {
            throw ProtocolError("token logprob must be <= 0");
        }
    }
    if (text::split_words(result.text).size() != result.token_logprobs.size()) {
        throw ProtocolError("token_logprobs length does not match the generated token count");
    }
}

}  // namespace gvqa::backends
