// SPDX-License-Identifier: Apache-2.0
#include "gvqa/pipeline.hpp"

#include "gvqa/guardrails.hpp"
#include "gvqa/imaging.hpp"
#include "gvqa/ragcore.hpp"
#include "gvqa/retrieval.hpp"
#include "gvqa/simd/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <fcntl.h>
#include <fstream>
#include <set>
#include <thread>
#include <unistd.h>

namespace gvqa::pipeline {
namespace {

using nlohmann::json;

std::shared_ptr<net::Transport> default_knowledge_transport(const config::PipelineConfig& config) {
    if (config.retrieval.offline) {
        return std::make_shared<net::OfflineTransport>();
    }
    if (config.retrieval.transport == config::KnowledgeTransport::fixtures) {
        return std::make_shared<retrieval::FixtureTransport>(config.retrieval.fixtures);
    }
    return std::make_shared<net::PoliteTransport>(std::make_shared<net::HttpTransport>());
}

std::string file_safe(std::string_view id) {
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out;
}

void write_json(const std::filesystem::path& path, const json& value) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string(), Stage::eval);
    }
    out << value.dump(2) << '\n';
}

json trace_record(const dataset::Sample& sample, const QueryPlan& plan, const retrieval::RetrievalSet& set,
                  const ragcore::AnswerResult& answer) {
    json docs = json::array();
    for (const auto& d : set.docs) {
        docs.push_back({{"doc_id", d.doc.doc_id},
                        {"source", retrieval::source_name(d.doc.source)},
                        {"title", d.doc.title},
                        {"raw_score", d.raw_score},
                        {"prob", d.prob}});
    }
    json candidates = json::array();
    for (const auto& c : answer.candidates) {
        json per_doc = json::array();
        for (const auto& lp : c.per_doc_logprob) {
            per_doc.push_back({{"doc_id", lp.doc_id}, {"logprob", lp.logprob}});
        }
        candidates.push_back({{"text", c.text}, {"marginal_prob", c.marginal_prob}, {"per_doc_logprob", per_doc}});
    }
    return json{{"sample_id", sample.sample_id},
                {"question", sample.question},
                {"caption", plan.vqa.caption},
                {"draft_answer", plan.vqa.draft_answer},
                {"query", plan.query},
                {"entity_labels", plan.labels},
                {"template_id", answer.prompt.template_id},
                {"prompt", answer.prompt.rendered},
                {"retrieval", docs},
                {"generation", {{"text", answer.generation.text}, {"token_logprobs", answer.generation.token_logprobs}}},
                {"candidates", candidates}};
}

SampleFailure to_failure(const std::string& sample_id) {
    try {
        throw;
    } catch (const Error& e) {
        return {sample_id, e.stage(), e.what()};
    } catch (const std::exception& e) {
        return {sample_id, std::nullopt, e.what()};
    }
}

json failure_json(const SampleFailure& f) {
    return json{{"sample_id", f.sample_id},
                {"stage", f.stage ? stage_name(*f.stage) : "internal"},
                {"exit_code", f.exit_code()},
                {"message", f.message}};
}

/// Calls `work(i)` for every index on up to `workers` threads.
template <typename Fn>
void for_each_index(std::size_t count, std::size_t workers, Fn&& work) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            work(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                work(i);
            }
        });
    }
}

}  // namespace

Services make_services(const config::PipelineConfig& config, const std::vector<dataset::Sample>& samples,
                       std::shared_ptr<net::Transport> knowledge_transport,
                       std::shared_ptr<net::Transport> backend_transport) {
    Services services;
    if (config.backend.kind == backends::BackendKind::mock) {
        backends::MockOptions options;
        options.embedding_dim = config.backend.embedding_dim;
        std::set<std::string> vocab;
        for (const auto& sample : samples) {
            for (const auto& answer : sample.gt_answers) {
                if (std::string norm = dataset::normalize_answer(answer); !norm.empty()) {
                    vocab.insert(std::move(norm));
                }
            }
        }
        options.extra_vocabulary.assign(vocab.begin(), vocab.end());
        services.backend = backends::mock_backend(config.backend_seed, std::move(options));
    } else {
        if (!backend_transport) {
            backend_transport = std::make_shared<net::HttpTransport>(std::chrono::seconds(120));
        }
        services.backend = backends::remote_backend(config.backend, std::move(backend_transport),
                                                    {config.max_in_flight, 3});
    }
    if (!knowledge_transport) {
        knowledge_transport = default_knowledge_transport(config);
    }
    services.knowledge_transport = std::make_shared<net::CountingTransport>(std::move(knowledge_transport));
    services.cache = std::make_shared<retrieval::DiskCache>(config.retrieval.cache_dir);
    services.client = std::make_shared<retrieval::KnowledgeClient>(services.knowledge_transport, services.cache,
                                                                   config.retrieval.offline, config.retrieval.endpoints);
    return services;
}

std::vector<dataset::Sample> load_samples(const config::PipelineConfig& config) {
    if (config.annotations.empty() || config.questions.empty()) {
        throw ValidationError(Stage::config, "dataset.annotations and dataset.questions are required");
    }
    std::vector<dataset::Sample> samples = dataset::load_dataset(config.annotations, config.questions);
    if (config.subsample_n > 0) {
        samples = dataset::subsample(samples, config.subsample_n, config.subsample_seed);
    }
    return samples;
}

QueryPlan plan_query(const config::PipelineConfig& config, const Services& services, const dataset::Sample& sample) {
    const imaging::RawImage image = imaging::load_image(config.image_dir / sample.image_ref);
    const imaging::PatchGrid patches = imaging::partition(image, config.grid.rows, config.grid.cols);
    QueryPlan plan;
    plan.vqa = services.backend->vision_qa(image, patches, sample.question);
    plan.query = retrieval::build_query(sample.question, plan.vqa.draft_answer, plan.vqa.caption);
    plan.labels = retrieval::detect_entity_labels(sample.question, plan.vqa.caption, plan.vqa.draft_answer,
                                                  config.retrieval.max_labels);
    return plan;
}

eval::VqaOutcome process_sample(const config::PipelineConfig& config, const Services& services,
                                const dataset::Sample& sample, json* trace) {
    const QueryPlan plan = plan_query(config, services, sample);

    const backends::Embedding query_embedding =
        config.retrieval.query_embedding == config::QueryEmbedding::joint
            ? plan.vqa.joint_embedding
            : services.backend->embed_text(sample.question + " " + plan.vqa.caption);
    retrieval::Retriever retriever(*services.client, *services.backend,
                                   {config.retrieval.top_k, config.retrieval.pool_size, config.retrieval.max_labels});
    const retrieval::RetrievalSet set = retriever.retrieve(plan.query, plan.labels, query_embedding);

    const ragcore::AnswerResult answer =
        ragcore::answer(sample.question, plan.vqa, set, *services.backend, config.snippet_chars, config.max_tokens);

    eval::VqaOutcome outcome;
    outcome.sample_id = sample.sample_id;
    outcome.category = sample.category;
    outcome.predicted_answer = answer.generation.text;
    outcome.draft_answer = plan.vqa.draft_answer;
    outcome.query_key = set.query_key;
    for (const auto& d : set.docs) {
        outcome.retrieval.push_back({d.doc.doc_id, d.raw_score, d.prob});
    }
    for (const auto& c : answer.candidates) {
        outcome.candidates.push_back({c.text, c.marginal_prob});
    }
    outcome.confidence = guardrails::confidence(plan.vqa, set, answer.generation, config.guardrails.alpha);
    outcome.gate = guardrails::gate(outcome.confidence, config.guardrails.lambda);
    outcome.grounding =
        guardrails::grounding_score(outcome.predicted_answer, sample.gt_answers, *services.backend, config.guardrails.tau);
    outcome.soft_accuracy = eval::soft_accuracy(outcome.predicted_answer, sample.gt_answers);

    if (trace) {
        *trace = trace_record(sample, plan, set, answer);
    }
    return outcome;
}

RunOutput run_samples(const config::PipelineConfig& config, const Services& services,
                      const std::vector<dataset::Sample>& samples) {
    std::vector<std::optional<eval::VqaOutcome>> outcomes(samples.size());
    std::vector<std::optional<SampleFailure>> failures(samples.size());
    std::vector<json> traces(config.trace ? samples.size() : 0);

    for_each_index(samples.size(), config.parallel, [&](std::size_t i) {
        try {
            outcomes[i] = process_sample(config, services, samples[i], config.trace ? &traces[i] : nullptr);
        } catch (...) {
            failures[i] = to_failure(samples[i].sample_id);
        }
    });

    RunOutput out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (outcomes[i]) {
            out.outcomes.push_back(std::move(*outcomes[i]));
            if (config.trace) {
                out.traces.push_back(std::move(traces[i]));
            }
        } else {
            out.failures.push_back(std::move(*failures[i]));
        }
    }
    return out;
}

std::vector<SampleFailure> warm_cache(const config::PipelineConfig& config, const Services& services,
                                      const std::vector<dataset::Sample>& samples) {
    std::vector<std::optional<SampleFailure>> failures(samples.size());
    retrieval::RetrieverConfig rc{config.retrieval.top_k, config.retrieval.pool_size, config.retrieval.max_labels};
    for_each_index(samples.size(), config.parallel, [&](std::size_t i) {
        try {
            const QueryPlan plan = plan_query(config, services, samples[i]);
            retrieval::Retriever(*services.client, *services.backend, rc).gather(plan.query, plan.labels);
        } catch (...) {
            failures[i] = to_failure(samples[i].sample_id);
        }
    });
    std::vector<SampleFailure> out;
    for (auto& f : failures) {
        if (f) {
            out.push_back(std::move(*f));
        }
    }
    return out;
}

RunLock::RunLock(const std::filesystem::path& dir) : m_path(dir / ".gvqa.lock") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
    }
    const int fd = ::open(m_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw IoError("run directory " + dir.string() + " is locked by another run (" + m_path.string() + ")");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    std::filesystem::remove(m_path, ec);
}

RunSummary execute_run(const config::PipelineConfig& config, const Services& services,
                       const std::vector<dataset::Sample>& samples, const std::filesystem::path& out_dir) {
    const RunLock lock(out_dir);
    const std::string digest = config::config_digest(config);

    RunSummary summary;
    summary.output = run_samples(config, services, samples);
    summary.transport_calls = services.knowledge_transport->calls();

    eval::write_outcomes(summary.output.outcomes, out_dir / "outcomes.jsonl");
    if (!summary.output.outcomes.empty()) {
        summary.reports = eval::aggregate_splits(summary.output.outcomes, config.grid, digest);
        eval::emit_report(summary.reports, out_dir);
        eval::write_sweep(eval::threshold_sweep(summary.output.outcomes), out_dir / "sweep.tsv");
    }

    json failures = json::array();
    for (const auto& f : summary.output.failures) {
        failures.push_back(failure_json(f));
    }
    write_json(out_dir / "failures.json", failures);

    if (config.trace) {
        const auto trace_dir = out_dir / "trace";
        std::filesystem::create_directories(trace_dir);
        for (const json& t : summary.output.traces) {
            write_json(trace_dir / (file_safe(t.at("sample_id").get<std::string>()) + ".json"), t);
        }
    }

    write_json(out_dir / "run.json", json{{"config_digest", digest},
                                          {"config", config::canonical_form(config)},
                                          {"grid", imaging::grid_label(config.grid)},
                                          {"samples", samples.size()},
                                          {"outcomes", summary.output.outcomes.size()},
                                          {"failures", summary.output.failures.size()},
                                          {"offline", config.retrieval.offline},
                                          {"transport_calls", summary.transport_calls},
                                          {"simd", simd::isa_name(simd::active_isa())}});
    return summary;
}

}  // namespace gvqa::pipeline
