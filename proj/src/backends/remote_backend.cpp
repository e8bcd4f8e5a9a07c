// SPDX-License-Identifier: Apache-2.0
#include "gvqa/error.hpp"
#include "gvqa/wire.hpp"

#include <atomic>
#include <chrono>
#include <semaphore>
#include <thread>

namespace gvqa::backends {
namespace {

using nlohmann::json;

class RemoteBackend final : public Backend {
public:
    RemoteBackend(BackendDescriptor descriptor, std::shared_ptr<net::Transport> transport, RemoteOptions options)
        : m_descriptor(std::move(descriptor)),
          m_transport(std::move(transport)),
          m_options(options),
          m_slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.max_in_flight))) {
        m_descriptor.kind = BackendKind::remote;
        validate(m_descriptor);
        while (!m_descriptor.endpoint.empty() && m_descriptor.endpoint.back() == '/') {
            m_descriptor.endpoint.pop_back();
        }
    }

    const BackendDescriptor& descriptor() const noexcept override { return m_descriptor; }

    VisionQaResult vision_qa(const imaging::RawImage& image, const imaging::PatchGrid& patches,
                             std::string_view question) const override {
        wire::VisionQaRequest request{next_id(), image, {patches.rows, patches.cols}, std::string(question)};
        VisionQaResult result = wire::decode_vision_response(call("/vision_qa", wire::encode(request), request.request_id));
        check_vision_result(result, m_descriptor.embedding_dim);
        return result;
    }

    GenerationResult generate(std::string_view prompt, std::size_t max_tokens) const override {
        wire::GenerateRequest request{next_id(), std::string(prompt), max_tokens, std::nullopt};
        GenerationResult result = wire::decode_generate_response(call("/generate", wire::encode(request), request.request_id));
        check_generation(result);
        if (result.token_logprobs.size() > max_tokens) {
            throw ProtocolError("generation exceeded max_tokens");
        }
        return result;
    }

    Embedding embed_text(std::string_view text) const override {
        wire::EmbedRequest request{next_id(), std::string(text)};
        Embedding e = wire::decode_embed_response(call("/embed", wire::encode(request), request.request_id));
        check_unit_embedding(e, m_descriptor.embedding_dim);
        return e;
    }

    double sequence_logprob(std::string_view prompt, std::string_view continuation) const override {
        wire::GenerateRequest request{next_id(), std::string(prompt), 1, std::string(continuation)};
        const double lp = wire::decode_score_response(call("/generate", wire::encode(request), request.request_id));
        if (lp > 0.0) {
            throw ProtocolError("sequence_logprob must be <= 0");
        }
        return lp;
    }

private:
    std::string next_id() const {
        return "req-" + std::to_string(m_counter.fetch_add(1) + 1);
    }

    json call(const std::string& path, const json& request, const std::string& request_id) const {
        const std::string url = m_descriptor.endpoint + path;
        const std::string body = wire::dump(request);
        auto backoff = std::chrono::milliseconds(100);
        for (int attempt = 1;; ++attempt) {
            net::HttpResponse response;
            bool retry = false;
            std::string failure;
            {
                m_slots.acquire();
                struct Release {
                    std::counting_semaphore<>& s;
                    ~Release() { s.release(); }
                } release{m_slots};
                try {
                    response = m_transport->post(url, body, "application/json");
                    retry = net::is_retryable_status(response.status);
                    failure = "HTTP " + std::to_string(response.status) + " from " + url;
                } catch (const TransportError& e) {
                    if (!e.retryable()) {
                        throw BackendError(e.what(), false);
                    }
                    retry = true;
                    failure = e.what();
                }
            }
            if (retry) {
                if (attempt >= m_options.attempts) {
                    throw BackendError(failure + " after " + std::to_string(attempt) + " attempts", true);
                }
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
                continue;
            }
            json message;
            try {
                message = json::parse(response.body);
            } catch (const json::exception&) {
                throw ProtocolError("non-JSON response from " + url);
            }
            if (response.status < 200 || response.status >= 300) {
                std::string detail = "HTTP " + std::to_string(response.status);
                if (message.is_object() && message.contains("error")) {
                    detail += ": " + message["error"].value("message", std::string{});
                }
                throw BackendError(url + " failed: " + detail, false);
            }
            wire::check_version(message);
            if (message.value("request_id", std::string{}) != request_id) {
                throw ProtocolError("response request_id does not match the request");
            }
            return message;
        }
    }

    BackendDescriptor m_descriptor;
    std::shared_ptr<net::Transport> m_transport;
    RemoteOptions m_options;
    mutable std::counting_semaphore<> m_slots;
    mutable std::atomic<std::uint64_t> m_counter{0};
};

}  // namespace

std::unique_ptr<Backend> remote_backend(BackendDescriptor descriptor, std::shared_ptr<net::Transport> transport,
                                        RemoteOptions options) {
    return std::make_unique<RemoteBackend>(std::move(descriptor), std::move(transport), options);
}

}  // namespace gvqa::backends
