// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvqa/backends.hpp"
#include "gvqa/imaging.hpp"
#include "gvqa/knowledge.hpp"

namespace gvqa::config {

enum class KnowledgeTransport { live, fixtures };
enum class QueryEmbedding { joint, text };

struct RetrievalSettings {
    std::size_t top_k = 3;
    std::size_t pool_size = 5;
    std::size_t max_labels = 2;
    bool offline = false;
    std::filesystem::path cache_dir = "gvqa-cache";
    KnowledgeTransport transport = KnowledgeTransport::live;
    std::filesystem::path fixtures;  ///< fixture file for transport = fixtures
    QueryEmbedding query_embedding = QueryEmbedding::joint;
    retrieval::Endpoints endpoints;
};

struct GuardrailSettings {
    double tau = 0.5;
    double lambda = 0.5;
    double alpha = 0.5;
};

struct PipelineConfig {
    backends::BackendDescriptor backend;
    std::uint64_t backend_seed = 0;
    std::size_t max_in_flight = 4;
    imaging::GridSize grid;
    RetrievalSettings retrieval;
    GuardrailSettings guardrails;
    std::size_t snippet_chars = 300;
    std::size_t max_tokens = 8;
    std::filesystem::path annotations;
    std::filesystem::path questions;
    std::filesystem::path image_dir;
    std::size_t subsample_n = 0;  ///< 0 keeps every sample
    std::uint64_t subsample_seed = 0;
    std::filesystem::path out_dir = "gvqa-run";
    std::size_t parallel = 1;
    bool trace = false;
};

inline constexpr std::string_view kEnvPrefix = "GVQA_";

/// Every recognised key, in documentation order.
const std::vector<std::string>& known_keys();

/// GVQA_ plus the key upper-cased with dots turned into underscores.
std::string env_name(std::string_view key);

using Overrides = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment. Relative paths are resolved
/// against the file's directory. Unknown keys and malformed lines throw
/// ValidationError (config stage).
Overrides read_config_file(const std::filesystem::path& path);

/// Values of every GVQA_* variable that names a known key.
Overrides environment_overrides();

/// defaults < file < environment < flags, then validated.
PipelineConfig parse_config(const std::optional<std::filesystem::path>& file, const Overrides& environment,
                            const Overrides& flags);

/// Applies one key. Throws ValidationError naming the key and its bound.
void apply(PipelineConfig& config, const std::string& key, const std::string& value);
void validate(const PipelineConfig& config);

/// Canonical `key=value` lines for the fields that change results. Paths,
/// output location, offline mode, parallelism and tracing are left out.
std::string canonical_form(const PipelineConfig& config);

/// SHA-256 of canonical_form.
std::string config_digest(const PipelineConfig& config);

}  // namespace gvqa::config
