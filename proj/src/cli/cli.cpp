// SPDX-License-Identifier: Apache-2.0
#include "gvqa/cli.hpp"

#include "gvqa/config.hpp"
#include "gvqa/error.hpp"
#include "gvqa/evalharness.hpp"
#include "gvqa/pipeline.hpp"
#include "gvqa/retrieval.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace gvqa::cli {
namespace {

using nlohmann::json;

struct Flags {
    std::string config_file;
    std::string grid;
    std::string top_k;
    std::string pool_size;
    std::string tau;
    std::string lambda;
    std::string alpha;
    bool offline = false;
    std::string subsample;
    std::string seed;
    std::string parallel;
    bool trace = false;
    std::string out;
    std::vector<std::string> sets;
};

config::PipelineConfig resolve(const Flags& f) {
    config::Overrides flags;
    for (const std::string& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(Stage::config, "--set expects key=value, got '" + kv + "'");
        }
        flags[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    const std::pair<const char*, const std::string*> direct[] = {
        {"grid", &f.grid},           {"retrieval.top_k", &f.top_k}, {"retrieval.pool_size", &f.pool_size},
        {"guardrails.tau", &f.tau},  {"guardrails.lambda", &f.lambda}, {"guardrails.alpha", &f.alpha},
        {"subsample.n", &f.subsample}, {"subsample.seed", &f.seed}, {"run.parallel", &f.parallel},
        {"output.dir", &f.out},
    };
    for (const auto& [key, value] : direct) {
        if (!value->empty()) {
            flags[key] = *value;
        }
    }
    if (f.offline) flags["retrieval.offline"] = "true";
    if (f.trace) flags["run.trace"] = "true";
    std::optional<std::filesystem::path> file;
    if (!f.config_file.empty()) {
        file = f.config_file;
    }
    return config::parse_config(file, config::environment_overrides(), flags);
}

int report_failures(const std::vector<pipeline::SampleFailure>& failures) {
    for (const auto& f : failures) {
        spdlog::error("{} [{}]: {}", f.sample_id, f.stage ? stage_name(*f.stage) : "internal", f.message);
    }
    return failures.empty() ? 0 : failures.front().exit_code();
}

int cmd_run(const config::PipelineConfig& cfg) {
    const auto samples = pipeline::load_samples(cfg);
    const auto services = pipeline::make_services(cfg, samples);
    const auto summary = pipeline::execute_run(cfg, services, samples, cfg.out_dir);
    std::cout << "run: " << summary.output.outcomes.size() << " outcomes, " << summary.output.failures.size()
              << " failures, " << summary.transport_calls << " knowledge fetches -> " << cfg.out_dir.string() << '\n';
    for (const auto& r : summary.reports) {
        std::cout << "  " << eval::split_filter_name(r.split) << " n=" << r.n << " accuracy=" << r.accuracy
                  << " grounding=" << r.grounding_mean << " hallucination=" << r.hallucination_rate << '\n';
    }
    return report_failures(summary.output.failures);
}

int cmd_eval(const std::filesystem::path& run_dir, std::filesystem::path out) {
    std::ifstream in(run_dir / "run.json");
    if (!in) {
        throw IoError("no run.json in " + run_dir.string(), Stage::eval);
    }
    const json run = json::parse(in, nullptr, false);
    if (run.is_discarded() || !run.contains("grid") || !run.contains("config_digest")) {
        throw ValidationError(Stage::eval, (run_dir / "run.json").string() + " is malformed");
    }
    const auto outcomes = eval::read_outcomes(run_dir / "outcomes.jsonl");
    const auto reports = eval::aggregate_splits(outcomes, imaging::parse_grid(run.at("grid").get<std::string>()),
                                                run.at("config_digest").get<std::string>());
    if (out.empty()) {
        out = run_dir / "eval";
    }
    eval::emit_report(reports, out);
    eval::write_sweep(eval::threshold_sweep(outcomes), out / "sweep.tsv");
    std::cout << "eval: " << outcomes.size() << " outcomes -> " << out.string() << '\n';
    return 0;
}

int cmd_ablate(const config::PipelineConfig& cfg, const std::string& grid_list) {
    std::vector<imaging::GridSize> grids;
    std::string item;
    std::istringstream list(grid_list);
    while (std::getline(list, item, ',')) {
        try {
            grids.push_back(imaging::parse_grid(item));
        } catch (const Error& e) {
            throw ValidationError(Stage::config, std::string("--grids: ") + e.what());
        }
    }
    const auto samples = pipeline::load_samples(cfg);
    const auto services = pipeline::make_services(cfg, samples);
    const pipeline::RunLock lock(cfg.out_dir);
    const auto reports = eval::ablate_grids(grids, [&](imaging::GridSize grid) {
        config::PipelineConfig per_grid = cfg;
        per_grid.grid = grid;
        const auto summary =
            pipeline::execute_run(per_grid, services, samples, cfg.out_dir / ("grid-" + imaging::grid_label(grid)));
        if (!summary.output.failures.empty()) {
            const auto& f = summary.output.failures.front();
            throw Error(f.stage.value_or(Stage::eval), f.sample_id + ": " + f.message);
        }
        return summary.reports;
    });
    eval::emit_report(reports, cfg.out_dir);
    for (const auto& r : reports) {
        std::cout << "ablate " << imaging::grid_label(r.grid) << ": accuracy=" << r.accuracy
                  << " grounding=" << r.grounding_mean << '\n';
    }
    return 0;
}

int cmd_retrieve(const config::PipelineConfig& cfg, const std::string& query, std::vector<std::string> labels) {
    const auto services = pipeline::make_services(cfg, {});
    if (labels.empty()) {
        labels = retrieval::detect_entity_labels(query, "", "", cfg.retrieval.max_labels);
    }
    retrieval::Retriever retriever(*services.client, *services.backend,
                                   {cfg.retrieval.top_k, cfg.retrieval.pool_size, cfg.retrieval.max_labels});
    const auto set = retriever.retrieve(query, labels, services.backend->embed_text(query));
    json docs = json::array();
    for (const auto& d : set.docs) {
        docs.push_back({{"doc_id", d.doc.doc_id},
                        {"title", d.doc.title},
                        {"raw_score", d.raw_score},
                        {"prob", d.prob},
                        {"text", d.doc.text}});
    }
    std::cout << json{{"query", set.query_key}, {"labels", labels}, {"docs", docs}}.dump(2) << '\n';
    return 0;
}

int cmd_cache_warm(const config::PipelineConfig& cfg) {
    if (cfg.retrieval.offline) {
        throw ValidationError(Stage::config, "cache-warm cannot run with retrieval.offline = true");
    }
    const auto samples = pipeline::load_samples(cfg);
    const auto services = pipeline::make_services(cfg, samples);
    const auto failures = pipeline::warm_cache(cfg, services, samples);
    std::cout << "cache-warm: " << samples.size() - failures.size() << "/" << samples.size() << " samples, "
              << services.knowledge_transport->calls() << " knowledge fetches -> " << cfg.retrieval.cache_dir.string()
              << '\n';
    return report_failures(failures);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return main(static_cast<int>(argv.size()), argv.data());
}

int main(int argc, const char* const* argv) {
    if (!spdlog::get("gvqa")) {
        spdlog::set_default_logger(spdlog::stderr_color_mt("gvqa"));
    }

    CLI::App app{"Retrieval-augmented visual question answering with OOD gating and grounding checks"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config_file, "key = value config file");
    app.add_option("--grid", f.grid, "patch grid, e.g. 2x2");
    app.add_option("--top-k", f.top_k, "documents kept after ranking");
    app.add_option("--pool-size", f.pool_size, "Wikipedia hits fetched per query");
    app.add_option("--tau", f.tau, "hallucination threshold");
    app.add_option("--lambda", f.lambda, "OOD gate threshold");
    app.add_option("--alpha", f.alpha, "retrieval weight in the combined confidence");
    app.add_flag("--offline", f.offline, "serve knowledge from the cache only");
    app.add_option("--subsample", f.subsample, "evaluate N samples");
    app.add_option("--seed", f.seed, "subsample seed");
    app.add_option("--parallel", f.parallel, "worker threads");
    app.add_flag("--trace", f.trace, "write per-sample trace records");
    app.add_option("--out", f.out, "run directory");
    app.add_option("--set", f.sets, "any config key, key=value");

    auto* run_cmd = app.add_subcommand("run", "full pipeline over the dataset");
    auto* eval_cmd = app.add_subcommand("eval", "recompute reports from a run directory");
    std::string run_dir;
    std::string eval_out;
    eval_cmd->add_option("--run-dir", run_dir, "directory written by run")->required();
    eval_cmd->add_option("--eval-out", eval_out, "report directory (default <run-dir>/eval)");
    auto* ablate_cmd = app.add_subcommand("ablate", "one run per grid size");
    std::string grids = "2x2,3x3,4x4";
    ablate_cmd->add_option("--grids", grids, "comma-separated grid list");
    auto* retrieve_cmd = app.add_subcommand("retrieve", "one-off retrieval for a query");
    std::string query;
    std::vector<std::string> labels;
    retrieve_cmd->add_option("--query", query, "query text")->required();
    retrieve_cmd->add_option("--label", labels, "DBpedia label (repeatable)");
    auto* warm_cmd = app.add_subcommand("cache-warm", "pre-fetch knowledge for every sample");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code_for(Stage::config);
    }

    try {
        if (eval_cmd->parsed()) {
            return cmd_eval(run_dir, eval_out);
        }
        const config::PipelineConfig cfg = resolve(f);
        if (run_cmd->parsed()) return cmd_run(cfg);
        if (ablate_cmd->parsed()) return cmd_ablate(cfg, grids);
        if (retrieve_cmd->parsed()) return cmd_retrieve(cfg, query, labels);
        if (warm_cmd->parsed()) return cmd_cache_warm(cfg);
    } catch (const Error& e) {
        spdlog::error("[{}] {}", stage_name(e.stage()), e.what());
        return exit_code_for(e.stage());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 1;
}

}  // namespace gvqa::cli
