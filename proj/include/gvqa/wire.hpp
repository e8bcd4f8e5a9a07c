// SPDX-License-Identifier: Apache-2.0
#pragma once

// v1 inference wire protocol: JSON envelopes over HTTP POST.
//
//   POST /vision_qa  {version, request_id, image{width,height,rgb_base64}, question, grid{rows,cols}}
//   POST /generate   {version, request_id, prompt, max_tokens[, continuation]}
//   POST /embed      {version, request_id, text}
//   GET  /health
//
// Responses mirror the domain types field-for-field and echo request_id.
// Failures come back as {version, request_id, error{stage, message}} with a
// non-2xx status. Doubles are written with 17 significant digits.

#include <json.hpp>

#include <string>
#include <string_view>
#include <optional>

#include "gvqa/backends.hpp"
#include "gvqa/net/transport.hpp"

namespace gvqa::wire {

inline constexpr std::string_view kProtocolVersion = "v1";

struct VisionQaRequest {
    std::string request_id;
    imaging::RawImage image;
    imaging::GridSize grid;
    std::string question;
};

struct GenerateRequest {
    std::string request_id;
    std::string prompt;
    std::size_t max_tokens = 1;
    /// When set, the server scores this continuation instead of decoding and
    /// answers with sequence_logprob.
    std::optional<std::string> continuation;
};

struct EmbedRequest {
    std::string request_id;
    std::string text;
};

nlohmann::json encode(const VisionQaRequest& request);
nlohmann::json encode(const GenerateRequest& request);
nlohmann::json encode(const EmbedRequest& request);

VisionQaRequest decode_vision_request(const nlohmann::json& message);
GenerateRequest decode_generate_request(const nlohmann::json& message);
EmbedRequest decode_embed_request(const nlohmann::json& message);

nlohmann::json encode_vision_response(const std::string& request_id, const backends::VisionQaResult& result);
nlohmann::json encode_generate_response(const std::string& request_id, const backends::GenerationResult& result);
nlohmann::json encode_score_response(const std::string& request_id, double sequence_logprob);
nlohmann::json encode_embed_response(const std::string& request_id, const backends::Embedding& embedding);
nlohmann::json encode_error(const std::string& request_id, std::string_view stage, std::string_view message);

backends::VisionQaResult decode_vision_response(const nlohmann::json& message);
backends::GenerationResult decode_generate_response(const nlohmann::json& message);
double decode_score_response(const nlohmann::json& message);
backends::Embedding decode_embed_response(const nlohmann::json& message);

/// Throws ProtocolError when the envelope lacks version "v1".
void check_version(const nlohmann::json& message);

/// Serves the protocol on top of any Backend (the mock in tests, or a shim in
/// front of real models). `path` is the URL path, e.g. "/generate".
net::HttpResponse serve(const backends::Backend& backend, std::string_view method, std::string_view path,
                        const std::string& body);

/// Compact serialization used on the wire.
std::string dump(const nlohmann::json& message);

}  // namespace gvqa::wire
