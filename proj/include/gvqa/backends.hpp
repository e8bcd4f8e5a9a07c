// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gvqa/imaging.hpp"

namespace gvqa::net {
class Transport;
}

namespace gvqa::backends {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

struct Embedding {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    std::span<const double> view() const noexcept { return values; }
    double norm() const noexcept;

    bool operator==(const Embedding&) const = default;
};

/// Scales `values` to unit length. Throws ValidationError on a zero vector.
Embedding normalized(std::vector<double> values);

struct AnswerProb {
    std::string answer;
    double prob = 0.0;

    bool operator==(const AnswerProb&) const = default;
};

struct VisionQaResult {
    std::string draft_answer;
    std::string caption;
    Embedding joint_embedding;
    std::vector<AnswerProb> answer_distribution;

    bool operator==(const VisionQaResult&) const = default;
};

struct GenerationResult {
    std::string text;
    std::vector<double> token_logprobs;  ///< natural log, one per whitespace token of `text`

    /// exp(mean token logprob); 0 for an empty generation.
    double geometric_mean_prob() const noexcept;

    bool operator==(const GenerationResult&) const = default;
};

enum class BackendKind { mock, remote };

struct BackendDescriptor {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;  ///< remote only
    std::string model_name = "mock";
    std::size_t embedding_dim = kDefaultEmbeddingDim;
};

/// Throws ValidationError unless remote descriptors carry an http(s) URL and dim >= 1.
void validate(const BackendDescriptor& descriptor);

// Invariant checks shared by the mock, the remote client, and the tests.
// Each throws ProtocolError naming the violated invariant.
void check_vision_result(const VisionQaResult& result, std::size_t dim);
void check_generation(const GenerationResult& result);
void check_unit_embedding(const Embedding& embedding, std::size_t dim);

/// The three frozen-model roles behind one interface. Implementations must be
/// safe to call concurrently.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const noexcept = 0;

    /// Full frame plus its patch list; the grid is part of the request.
    virtual VisionQaResult vision_qa(const imaging::RawImage& image, const imaging::PatchGrid& patches,
                                     std::string_view question) const = 0;

    /// Greedy decoding: every step emits the most probable next token.
    virtual GenerationResult generate(std::string_view prompt, std::size_t max_tokens) const = 0;

    /// Unit-norm sentence embedding.
    virtual Embedding embed_text(std::string_view text) const = 0;

    /// log P(continuation, end-of-sequence | prompt) under the generator.
    /// -infinity when the continuation cannot be produced.
    virtual double sequence_logprob(std::string_view prompt, std::string_view continuation) const = 0;
};

struct MockOptions {
    std::size_t embedding_dim = kDefaultEmbeddingDim;
    /// Appended to the built-in answer vocabulary (typically the dataset's
    /// normalized ground-truth answers so accuracy is exercisable).
    std::vector<std::string> extra_vocabulary;
};

/// Deterministic stand-in for the frozen models: every output is a pure
/// function of (seed, inputs), built from SplitMix64 hashing.
std::unique_ptr<Backend> mock_backend(std::uint64_t seed, MockOptions options = {});

struct RemoteOptions {
    std::size_t max_in_flight = 4;
    int attempts = 3;
};

/// Client for the v1 inference wire protocol.
std::unique_ptr<Backend> remote_backend(BackendDescriptor descriptor, std::shared_ptr<net::Transport> transport,
                                        RemoteOptions options = {});

}  // namespace gvqa::backends
