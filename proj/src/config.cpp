// SPDX-License-Identifier: Apache-2.0
#include "gvqa/config.hpp"

#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"
#include "gvqa/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace gvqa::config {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw ValidationError(Stage::config, key + ": " + why);
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || value.empty()) {
        bad(key, "expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

std::size_t to_count(const std::string& key, const std::string& value, std::size_t min) {
    const std::uint64_t v = to_u64(key, value);
    if (v < min) {
        bad(key, "must be >= " + std::to_string(min) + ", got " + value);
    }
    return static_cast<std::size_t>(v);
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size()) {
        bad(key, "expected a number, got '" + value + "'");
    }
    return v;
}

double in_unit(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (!(v >= 0.0 && v <= 1.0)) {
        bad(key, "must lie in [0, 1], got " + value);
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string v = text::to_lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad(key, "expected true or false, got '" + value + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table{
        {"backend.kind",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             if (v == "mock") c.backend.kind = backends::BackendKind::mock;
             else if (v == "remote") c.backend.kind = backends::BackendKind::remote;
             else bad(k, "must be mock or remote, got '" + v + "'");
         }},
        {"backend.endpoint", [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.endpoint = v; }},
        {"backend.model", [](PipelineConfig& c, const std::string&, const std::string& v) { c.backend.model_name = v; }},
        {"backend.embedding_dim",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.backend.embedding_dim = to_count(k, v, 1); }},
        {"backend.seed", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.backend_seed = to_u64(k, v); }},
        {"backend.max_in_flight",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.max_in_flight = to_count(k, v, 1); }},
        {"grid",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.grid = imaging::parse_grid(v);
             } catch (const Error& e) {
                 bad(k, e.what());
             }
             if (c.grid.rows < 1 || c.grid.cols < 1) bad(k, "must be at least 1x1");
         }},
        {"retrieval.top_k",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.retrieval.top_k = to_count(k, v, 1); }},
        {"retrieval.pool_size",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.retrieval.pool_size = to_count(k, v, 1); }},
        {"retrieval.max_labels",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.retrieval.max_labels = to_count(k, v, 0); }},
        {"retrieval.offline",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.retrieval.offline = to_bool(k, v); }},
        {"retrieval.cache_dir", [](PipelineConfig& c, const std::string&, const std::string& v) { c.retrieval.cache_dir = v; }},
        {"retrieval.transport",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             if (v == "live") c.retrieval.transport = KnowledgeTransport::live;
             else if (v == "fixtures") c.retrieval.transport = KnowledgeTransport::fixtures;
             else bad(k, "must be live or fixtures, got '" + v + "'");
         }},
        {"retrieval.fixtures", [](PipelineConfig& c, const std::string&, const std::string& v) { c.retrieval.fixtures = v; }},
        {"retrieval.query_embedding",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             if (v == "joint") c.retrieval.query_embedding = QueryEmbedding::joint;
             else if (v == "text") c.retrieval.query_embedding = QueryEmbedding::text;
             else bad(k, "must be joint or text, got '" + v + "'");
         }},
        {"retrieval.wikipedia_endpoint",
         [](PipelineConfig& c, const std::string&, const std::string& v) { c.retrieval.endpoints.wikipedia = v; }},
        {"retrieval.dbpedia_endpoint",
         [](PipelineConfig& c, const std::string&, const std::string& v) { c.retrieval.endpoints.dbpedia = v; }},
        {"guardrails.tau",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             const double t = to_double(k, v);
             if (!(t > -1.0 && t < 1.0)) bad(k, "must lie in (-1, 1), got " + v);
             c.guardrails.tau = t;
         }},
        {"guardrails.lambda",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.guardrails.lambda = in_unit(k, v); }},
        {"guardrails.alpha",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.guardrails.alpha = in_unit(k, v); }},
        {"ragcore.snippet_chars",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.snippet_chars = to_count(k, v, 1); }},
        {"ragcore.max_tokens",
         [](PipelineConfig& c, const std::string& k, const std::string& v) { c.max_tokens = to_count(k, v, 1); }},
        {"dataset.annotations", [](PipelineConfig& c, const std::string&, const std::string& v) { c.annotations = v; }},
        {"dataset.questions", [](PipelineConfig& c, const std::string&, const std::string& v) { c.questions = v; }},
        {"dataset.image_dir", [](PipelineConfig& c, const std::string&, const std::string& v) { c.image_dir = v; }},
        {"subsample.n", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.subsample_n = to_count(k, v, 0); }},
        {"subsample.seed", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.subsample_seed = to_u64(k, v); }},
        {"output.dir", [](PipelineConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
        {"run.parallel", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.parallel = to_count(k, v, 1); }},
        {"run.trace", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.trace = to_bool(k, v); }},
    };
    return table;
}

bool is_path_key(std::string_view key) {
    return key == "retrieval.cache_dir" || key == "retrieval.fixtures" || key == "dataset.annotations" ||
           key == "dataset.questions" || key == "dataset.image_dir" || key == "output.dir";
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [key, setter] : setters()) {
            out.push_back(key);
        }
        return out;
    }();
    return keys;
}

std::string env_name(std::string_view key) {
    std::string name(kEnvPrefix);
    for (char c : key) {
        name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

Overrides read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string(), Stage::config);
    }
    const std::filesystem::path base = path.parent_path();
    const auto& keys = known_keys();
    Overrides out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = std::string(text::trim(line));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(Stage::config,
                                  path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(text::trim(std::string_view(line).substr(0, eq)));
        std::string value(text::trim(std::string_view(line).substr(eq + 1)));
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError(Stage::config, path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (is_path_key(key) && !value.empty() && std::filesystem::path(value).is_relative()) {
            value = (base / value).lexically_normal().string();
        }
        out[key] = value;
    }
    return out;
}

Overrides environment_overrides() {
    Overrides out;
    for (const std::string& key : known_keys()) {
        if (const char* v = std::getenv(env_name(key).c_str())) {
            out[key] = v;
        }
    }
    return out;
}

void apply(PipelineConfig& config, const std::string& key, const std::string& value) {
    for (const auto& [name, setter] : setters()) {
        if (name == key) {
            setter(config, key, std::string(text::trim(value)));
            return;
        }
    }
    throw ValidationError(Stage::config, "unknown key '" + key + "'");
}

void validate(const PipelineConfig& c) {
    if (c.backend.kind == backends::BackendKind::remote) {
        try {
            backends::validate(c.backend);
        } catch (const Error& e) {
            bad("backend.endpoint", e.what());
        }
    }
    if (c.retrieval.transport == KnowledgeTransport::fixtures && c.retrieval.fixtures.empty()) {
        bad("retrieval.fixtures", "required when retrieval.transport = fixtures");
    }
    if (c.retrieval.top_k < 1) bad("retrieval.top_k", "must be >= 1");
    if (c.grid.rows < 1 || c.grid.cols < 1) bad("grid", "must be at least 1x1");
    if (!(c.guardrails.tau > -1.0 && c.guardrails.tau < 1.0)) bad("guardrails.tau", "must lie in (-1, 1)");
    if (!(c.guardrails.lambda >= 0.0 && c.guardrails.lambda <= 1.0)) bad("guardrails.lambda", "must lie in [0, 1]");
    if (!(c.guardrails.alpha >= 0.0 && c.guardrails.alpha <= 1.0)) bad("guardrails.alpha", "must lie in [0, 1]");
    if (c.parallel < 1) bad("run.parallel", "must be >= 1");
}

PipelineConfig parse_config(const std::optional<std::filesystem::path>& file, const Overrides& environment,
                            const Overrides& flags) {
    PipelineConfig config;
    if (file) {
        for (const auto& [key, value] : read_config_file(*file)) {
            apply(config, key, value);
        }
    }
    for (const Overrides* layer : {&environment, &flags}) {
        for (const auto& [key, value] : *layer) {
            apply(config, key, value);
        }
    }
    validate(config);
    return config;
}

std::string canonical_form(const PipelineConfig& c) {
    std::ostringstream out;
    out << "backend.kind=" << (c.backend.kind == backends::BackendKind::mock ? "mock" : "remote") << '\n'
        << "backend.endpoint=" << c.backend.endpoint << '\n'
        << "backend.model=" << c.backend.model_name << '\n'
        << "backend.embedding_dim=" << c.backend.embedding_dim << '\n'
        << "backend.seed=" << c.backend_seed << '\n'
        << "grid=" << imaging::grid_label(c.grid) << '\n'
        << "retrieval.top_k=" << c.retrieval.top_k << '\n'
        << "retrieval.pool_size=" << c.retrieval.pool_size << '\n'
        << "retrieval.max_labels=" << c.retrieval.max_labels << '\n'
        << "retrieval.query_embedding=" << (c.retrieval.query_embedding == QueryEmbedding::joint ? "joint" : "text")
        << '\n'
        << "guardrails.tau=" << fmt(c.guardrails.tau) << '\n'
        << "guardrails.lambda=" << fmt(c.guardrails.lambda) << '\n'
        << "guardrails.alpha=" << fmt(c.guardrails.alpha) << '\n'
        << "ragcore.snippet_chars=" << c.snippet_chars << '\n'
        << "ragcore.max_tokens=" << c.max_tokens << '\n'
        << "subsample.n=" << c.subsample_n << '\n'
        << "subsample.seed=" << c.subsample_seed << '\n';
    return out.str();
}

std::string config_digest(const PipelineConfig& config) {
    return sha256_hex(canonical_form(config));
}

}  // namespace gvqa::config
