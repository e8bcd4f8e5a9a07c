// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "gvqa/error.hpp"

namespace gvqa::net {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Request/response transport. Implementations throw TransportError when no
/// response could be obtained; HTTP error statuses are returned, not thrown.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
    virtual HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) = 0;
};

/// Live HTTP(S) transport.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::chrono::milliseconds timeout = std::chrono::seconds(20),
                           std::string user_agent = "gvqa/0.1 (knowledge retrieval client)");
    HttpResponse get(const std::string& url) override;
    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;

private:
    std::chrono::milliseconds m_timeout;
    std::string m_user_agent;
};

/// Counts every call that reaches the wrapped transport.
class CountingTransport final : public Transport {
public:
    explicit CountingTransport(std::shared_ptr<Transport> inner) : m_inner(std::move(inner)) {}
    HttpResponse get(const std::string& url) override;
    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;

    std::size_t calls() const noexcept { return m_calls.load(); }

private:
    std::shared_ptr<Transport> m_inner;
    std::atomic<std::size_t> m_calls{0};
};

struct PolitenessPolicy {
    std::chrono::milliseconds min_spacing{100};  ///< per host
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
};

/// Per-host request spacing plus exponential backoff on retryable failures
/// (transport errors, 429 and 5xx statuses).
class PoliteTransport final : public Transport {
public:
    PoliteTransport(std::shared_ptr<Transport> inner, PolitenessPolicy policy = {});
    HttpResponse get(const std::string& url) override;
    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;

private:
    HttpResponse with_retries(const std::string& url, const std::function<HttpResponse()>& call);
    void wait_turn(const std::string& host);

    std::shared_ptr<Transport> m_inner;
    PolitenessPolicy m_policy;
    std::mutex m_mutex;
    std::map<std::string, std::chrono::steady_clock::time_point> m_next_slot;
};

/// Rejects every call; used when the pipeline must stay off the network.
class OfflineTransport final : public Transport {
public:
    HttpResponse get(const std::string& url) override;
    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;
};

/// Adapts a callable to the Transport interface (in-process servers in tests).
class LoopbackTransport final : public Transport {
public:
    using Handler = std::function<HttpResponse(const std::string& method, const std::string& url, const std::string& body)>;
    explicit LoopbackTransport(Handler handler) : m_handler(std::move(handler)) {}
    HttpResponse get(const std::string& url) override { return m_handler("GET", url, {}); }
    HttpResponse post(const std::string& url, const std::string& body, const std::string&) override {
        return m_handler("POST", url, body);
    }

private:
    Handler m_handler;
};

/// "scheme://host[:port]" of an absolute URL, or empty when malformed.
std::string url_origin(const std::string& url);
/// Path plus query of an absolute URL ("/" when absent).
std::string url_path(const std::string& url);
/// Decoded value of query parameter `name`, empty if absent.
std::string query_param(const std::string& url, const std::string& name);
std::string url_decode(const std::string& s);

bool is_retryable_status(int status) noexcept;

}  // namespace gvqa::net
