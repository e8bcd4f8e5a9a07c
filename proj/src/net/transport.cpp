// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "gvqa/net/transport.hpp"

#include <thread>

namespace gvqa::net {
namespace {

std::string host_of(const std::string& url) {
    return url_origin(url);
}

HttpResponse to_response(const httplib::Result& result, const std::string& url) {
    if (!result) {
        throw TransportError("request to " + url + " failed: " + httplib::to_string(result.error()), true);
    }
    return HttpResponse{result->status, result->body};
}

httplib::Client make_client(const std::string& url, std::chrono::milliseconds timeout, const std::string& agent) {
    const std::string origin = url_origin(url);
    if (origin.empty()) {
        throw TransportError("malformed URL: " + url, false);
    }
    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(), 0);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(), 0);
    client.set_follow_location(true);
    client.set_default_headers({{"User-Agent", agent}});
    return client;
}

}  // namespace

HttpTransport::HttpTransport(std::chrono::milliseconds timeout, std::string user_agent)
    : m_timeout(timeout), m_user_agent(std::move(user_agent)) {}

HttpResponse HttpTransport::get(const std::string& url) {
    httplib::Client client = make_client(url, m_timeout, m_user_agent);
    return to_response(client.Get(url_path(url)), url);
}

HttpResponse HttpTransport::post(const std::string& url, const std::string& body, const std::string& content_type) {
    httplib::Client client = make_client(url, m_timeout, m_user_agent);
    return to_response(client.Post(url_path(url), body, content_type), url);
}

HttpResponse CountingTransport::get(const std::string& url) {
    ++m_calls;
    return m_inner->get(url);
}

HttpResponse CountingTransport::post(const std::string& url, const std::string& body, const std::string& content_type) {
    ++m_calls;
    return m_inner->post(url, body, content_type);
}

PoliteTransport::PoliteTransport(std::shared_ptr<Transport> inner, PolitenessPolicy policy)
    : m_inner(std::move(inner)), m_policy(policy) {}

void PoliteTransport::wait_turn(const std::string& host) {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(m_mutex);
        const auto now = std::chrono::steady_clock::now();
        auto& next = m_next_slot[host];
        slot = std::max(now, next);
        next = slot + m_policy.min_spacing;
    }
    std::this_thread::sleep_until(slot);
}

HttpResponse PoliteTransport::with_retries(const std::string& url, const std::function<HttpResponse()>& call) {
    auto backoff = m_policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        wait_turn(host_of(url));
        try {
            HttpResponse response = call();
            if (!is_retryable_status(response.status) || attempt >= m_policy.attempts) {
                return response;
            }
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= m_policy.attempts) {
                throw;
            }
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

HttpResponse PoliteTransport::get(const std::string& url) {
    return with_retries(url, [&] { return m_inner->get(url); });
}

HttpResponse PoliteTransport::post(const std::string& url, const std::string& body, const std::string& content_type) {
    return with_retries(url, [&] { return m_inner->post(url, body, content_type); });
}

HttpResponse OfflineTransport::get(const std::string& url) {
    throw TransportError("offline mode: refusing GET " + url, false);
}

HttpResponse OfflineTransport::post(const std::string& url, const std::string&, const std::string&) {
    throw TransportError("offline mode: refusing POST " + url, false);
}

std::string url_origin(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) {
        return {};
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        return {};
    }
    const auto host_start = scheme_end + 3;
    const auto host_end = url.find_first_of("/?#", host_start);
    const std::string host = url.substr(host_start, host_end == std::string::npos ? std::string::npos : host_end - host_start);
    if (host.empty() || host.front() == ':') {
        return {};
    }
    return scheme + "://" + host;
}

std::string url_path(const std::string& url) {
    const std::string origin = url_origin(url);
    if (origin.empty() || url.size() == origin.size()) {
        return "/";
    }
    std::string rest = url.substr(origin.size());
    if (rest.front() == '?') {
        rest.insert(rest.begin(), '/');
    }
    return rest;
}

std::string url_decode(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
        } else if (s[i] == '+') {
            out.push_back(' ');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::string query_param(const std::string& url, const std::string& name) {
    const auto q = url.find('?');
    if (q == std::string::npos) {
        return {};
    }
    std::size_t pos = q + 1;
    while (pos <= url.size()) {
        const auto amp = url.find('&', pos);
        const std::string pair = url.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
        const auto eq = pair.find('=');
        if (pair.substr(0, eq) == name) {
            return eq == std::string::npos ? std::string{} : url_decode(pair.substr(eq + 1));
        }
        if (amp == std::string::npos) {
            break;
        }
        pos = amp + 1;
    }
    return {};
}

bool is_retryable_status(int status) noexcept {
    return status == 429 || status >= 500;
}

}  // namespace gvqa::net
