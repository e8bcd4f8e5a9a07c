// SPDX-License-Identifier: Apache-2.0
#include "gvqa/wire.hpp"

#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"

#include <cmath>
#include <limits>

namespace gvqa::wire {
namespace {

using nlohmann::json;

template <typename T>
T field(const json& message, const char* name) {
    if (!message.is_object() || !message.contains(name)) {
        throw ProtocolError(std::string("missing field '") + name + "'");
    }
    try {
        return message.at(name).get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(std::string("field '") + name + "' has the wrong type");
    }
}

json envelope(const std::string& request_id) {
    return json{{"version", kProtocolVersion}, {"request_id", request_id}};
}

json numbers(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) {
        out.push_back(v);
    }
    return out;
}

// JSON has no -infinity; an impossible continuation travels as null.
json logprob_value(double lp) {
    return std::isfinite(lp) ? json(lp) : json(nullptr);
}

double logprob_from(const json& v) {
    if (v.is_null()) {
        return -std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) {
        throw ProtocolError("sequence_logprob must be a number or null");
    }
    return v.get<double>();
}

}  // namespace

std::string dump(const json& message) {
    return message.dump();
}

void check_version(const json& message) {
    if (!message.is_object() || !message.contains("version") || message["version"] != kProtocolVersion) {
        throw ProtocolError("message lacks protocol version \"v1\"");
    }
}

json encode(const VisionQaRequest& r) {
    json m = envelope(r.request_id);
    m["image"] = {{"width", r.image.width}, {"height", r.image.height}, {"rgb_base64", base64_encode(r.image.data)}};
    m["question"] = r.question;
    m["grid"] = {{"rows", r.grid.rows}, {"cols", r.grid.cols}};
    return m;
}

json encode(const GenerateRequest& r) {
    json m = envelope(r.request_id);
    m["prompt"] = r.prompt;
    m["max_tokens"] = r.max_tokens;
    if (r.continuation) {
        m["continuation"] = *r.continuation;
    }
    return m;
}

json encode(const EmbedRequest& r) {
    json m = envelope(r.request_id);
    m["text"] = r.text;
    return m;
}

VisionQaRequest decode_vision_request(const json& m) {
    check_version(m);
    VisionQaRequest r;
    r.request_id = m.value("request_id", std::string{});
    const json& image = m.at("image");
    const std::string raw = base64_decode(field<std::string>(image, "rgb_base64"));
    try {
        r.image = imaging::RawImage(field<std::uint32_t>(image, "width"), field<std::uint32_t>(image, "height"),
                                    std::vector<std::uint8_t>(raw.begin(), raw.end()));
    } catch (const ValidationError& e) {
        throw ProtocolError(e.what());
    }
    r.question = field<std::string>(m, "question");
    const json& grid = m.at("grid");
    r.grid = {field<std::uint32_t>(grid, "rows"), field<std::uint32_t>(grid, "cols")};
    return r;
}

GenerateRequest decode_generate_request(const json& m) {
    check_version(m);
    GenerateRequest r;
    r.request_id = m.value("request_id", std::string{});
    r.prompt = field<std::string>(m, "prompt");
    r.max_tokens = field<std::size_t>(m, "max_tokens");
    if (m.contains("continuation")) {
        r.continuation = field<std::string>(m, "continuation");
    }
    return r;
}

EmbedRequest decode_embed_request(const json& m) {
    check_version(m);
    return EmbedRequest{m.value("request_id", std::string{}), field<std::string>(m, "text")};
}

json encode_vision_response(const std::string& request_id, const backends::VisionQaResult& result) {
    json m = envelope(request_id);
    m["draft_answer"] = result.draft_answer;
    m["caption"] = result.caption;
    m["joint_embedding"] = numbers(result.joint_embedding.values);
    json dist = json::array();
    for (const auto& entry : result.answer_distribution) {
        dist.push_back({{"answer", entry.answer}, {"prob", entry.prob}});
    }
    m["answer_distribution"] = std::move(dist);
    return m;
}

json encode_generate_response(const std::string& request_id, const backends::GenerationResult& result) {
    json m = envelope(request_id);
    m["text"] = result.text;
    m["token_logprobs"] = numbers(result.token_logprobs);
    return m;
}

json encode_score_response(const std::string& request_id, double sequence_logprob) {
    json m = envelope(request_id);
    m["sequence_logprob"] = logprob_value(sequence_logprob);
    return m;
}

json encode_embed_response(const std::string& request_id, const backends::Embedding& embedding) {
    json m = envelope(request_id);
    m["embedding"] = numbers(embedding.values);
    m["dim"] = embedding.dim();
    return m;
}

json encode_error(const std::string& request_id, std::string_view stage, std::string_view message) {
    json m = envelope(request_id);
    m["error"] = {{"stage", stage}, {"message", message}};
    return m;
}

backends::VisionQaResult decode_vision_response(const json& m) {
    check_version(m);
    backends::VisionQaResult r;
    r.draft_answer = field<std::string>(m, "draft_answer");
    r.caption = field<std::string>(m, "caption");
    r.joint_embedding.values = field<std::vector<double>>(m, "joint_embedding");
    for (const json& entry : field<json>(m, "answer_distribution")) {
        r.answer_distribution.push_back({field<std::string>(entry, "answer"), field<double>(entry, "prob")});
    }
    return r;
}

backends::GenerationResult decode_generate_response(const json& m) {
    check_version(m);
    return backends::GenerationResult{field<std::string>(m, "text"), field<std::vector<double>>(m, "token_logprobs")};
}

double decode_score_response(const json& m) {
    check_version(m);
    if (!m.contains("sequence_logprob")) {
        throw ProtocolError("missing field 'sequence_logprob'");
    }
    return logprob_from(m["sequence_logprob"]);
}

backends::Embedding decode_embed_response(const json& m) {
    check_version(m);
    backends::Embedding e{field<std::vector<double>>(m, "embedding")};
    if (m.contains("dim") && field<std::size_t>(m, "dim") != e.dim()) {
        throw ProtocolError("embedding length disagrees with 'dim'");
    }
    return e;
}

net::HttpResponse serve(const backends::Backend& backend, std::string_view method, std::string_view path,
                        const std::string& body) {
    std::string request_id;
    try {
        if (method == "GET" && path == "/health") {
            const auto& d = backend.descriptor();
            json m = envelope({});
            m["models"] = {{"vision_qa", d.model_name}, {"generator", d.model_name}, {"embedder", d.model_name}};
            m["dim"] = d.embedding_dim;
            return {200, dump(m)};
        }
        if (method != "POST") {
            return {405, dump(encode_error({}, "protocol", "method not allowed"))};
        }
        json message;
        try {
            message = json::parse(body);
        } catch (const json::exception& e) {
            return {400, dump(encode_error({}, "protocol", std::string("malformed JSON: ") + e.what()))};
        }
        request_id = message.is_object() ? message.value("request_id", std::string{}) : std::string{};
        if (path == "/vision_qa") {
            const VisionQaRequest r = decode_vision_request(message);
            const imaging::PatchGrid grid = imaging::partition(r.image, r.grid.rows, r.grid.cols);
            return {200, dump(encode_vision_response(r.request_id, backend.vision_qa(r.image, grid, r.question)))};
        }
        if (path == "/generate") {
            const GenerateRequest r = decode_generate_request(message);
            if (r.continuation) {
                return {200, dump(encode_score_response(r.request_id, backend.sequence_logprob(r.prompt, *r.continuation)))};
            }
            return {200, dump(encode_generate_response(r.request_id, backend.generate(r.prompt, r.max_tokens)))};
        }
        if (path == "/embed") {
            const EmbedRequest r = decode_embed_request(message);
            return {200, dump(encode_embed_response(r.request_id, backend.embed_text(r.text)))};
        }
        return {404, dump(encode_error(request_id, "protocol", "unknown endpoint " + std::string(path)))};
    } catch (const ProtocolError& e) {
        return {400, dump(encode_error(request_id, "protocol", e.what()))};
    } catch (const ValidationError& e) {
        return {400, dump(encode_error(request_id, stage_name(e.stage()), e.what()))};
    } catch (const std::exception& e) {
        return {500, dump(encode_error(request_id, "backend", e.what()))};
    }
}

}  // namespace gvqa::wire
