// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvqa/backends.hpp"
#include "gvqa/cache.hpp"
#include "gvqa/config.hpp"
#include "gvqa/dataset.hpp"
#include "gvqa/error.hpp"
#include "gvqa/evalharness.hpp"
#include "gvqa/knowledge.hpp"
#include "gvqa/net/transport.hpp"

namespace gvqa::pipeline {

/// Backend plus the knowledge stack for one run. The knowledge transport is
/// wrapped in a counter so offline runs can prove they never went out.
struct Services {
    std::shared_ptr<backends::Backend> backend;
    std::shared_ptr<net::CountingTransport> knowledge_transport;
    std::shared_ptr<retrieval::DiskCache> cache;
    std::shared_ptr<retrieval::KnowledgeClient> client;
};

/// Transports default to the ones the config names. The mock backend's
/// vocabulary is extended with the samples' normalized answers.
Services make_services(const config::PipelineConfig& config, const std::vector<dataset::Sample>& samples,
                       std::shared_ptr<net::Transport> knowledge_transport = nullptr,
                       std::shared_ptr<net::Transport> backend_transport = nullptr);

/// Loads the configured dataset and applies the configured subsample.
std::vector<dataset::Sample> load_samples(const config::PipelineConfig& config);

struct QueryPlan {
    backends::VisionQaResult vqa;
    std::string query;
    std::vector<std::string> labels;
};

/// Image decode, tiling, vision QA, and the retrieval query it implies.
QueryPlan plan_query(const config::PipelineConfig& config, const Services& services, const dataset::Sample& sample);

/// One sample end to end. When `trace` is non-null it receives the prompt,
/// retrieval set and log-probabilities.
eval::VqaOutcome process_sample(const config::PipelineConfig& config, const Services& services,
                                const dataset::Sample& sample, nlohmann::json* trace = nullptr);

struct SampleFailure {
    std::string sample_id;
    std::optional<Stage> stage;  ///< empty for non-pipeline exceptions
    std::string message;

    int exit_code() const noexcept { return stage ? exit_code_for(*stage) : 1; }
};

struct RunOutput {
    std::vector<eval::VqaOutcome> outcomes;  ///< input order, failed samples omitted
    std::vector<SampleFailure> failures;
    std::vector<nlohmann::json> traces;  ///< empty unless config.trace
};

/// Fans samples out over config.parallel workers; results keep input order.
RunOutput run_samples(const config::PipelineConfig& config, const Services& services,
                      const std::vector<dataset::Sample>& samples);

/// Pre-fetches the knowledge every sample would retrieve. Returns failures.
std::vector<SampleFailure> warm_cache(const config::PipelineConfig& config, const Services& services,
                                      const std::vector<dataset::Sample>& samples);

/// Exclusive claim on a run directory, released on destruction.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path m_path;
};

struct RunSummary {
    RunOutput output;
    std::vector<eval::RunReport> reports;
    std::size_t transport_calls = 0;

    int exit_code() const noexcept { return output.failures.empty() ? 0 : output.failures.front().exit_code(); }
};

/// Runs the samples and writes the run directory:
///   outcomes.jsonl, reports.json, summary.tsv, sweep.tsv, failures.json,
///   run.json and, with tracing, trace/<sample_id>.json.
RunSummary execute_run(const config::PipelineConfig& config, const Services& services,
                       const std::vector<dataset::Sample>& samples, const std::filesystem::path& out_dir);

}  // namespace gvqa::pipeline
