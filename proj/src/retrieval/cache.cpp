// SPDX-License-Identifier: Apache-2.0
#include "gvqa/cache.hpp"

#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"
#include "gvqa/retrieval.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

namespace gvqa::retrieval {
namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::atomic<std::uint64_t> g_tmp_counter{0};

}  // namespace

DiskCache::DiskCache(std::filesystem::path dir, std::size_t max_payload_bytes)
    : m_dir(std::move(dir)), m_max_payload(max_payload_bytes) {
    std::error_code ec;
    std::filesystem::create_directories(m_dir, ec);
    if (ec) {
        throw IoError("cannot create cache directory " + m_dir.string() + ": " + ec.message(), Stage::retrieval);
    }
}

std::filesystem::path DiskCache::record_path(std::string_view source, std::string_view key) const {
    return m_dir / (sha256_hex(std::string(source) + '\n' + normalize_query(key)) + ".json");
}

std::optional<CacheEntry> DiskCache::get(std::string_view source, std::string_view key) const {
    const auto path = record_path(source, key);
    std::ifstream in(path);
    if (!in) {
        return std::nullopt;
    }
    try {
        const nlohmann::json record = nlohmann::json::parse(in);
        CacheEntry entry{record.at("key").get<std::string>(), record.at("source").get<std::string>(),
                         record.at("fetched_at").get<std::string>(), record.at("status").get<int>(),
                         record.at("payload").get<std::string>()};
        if (entry.key != normalize_query(key) || entry.source != source) {
            throw std::runtime_error("record key does not match its file name");
        }
        return entry;
    } catch (const std::exception& e) {
        spdlog::warn("cache: ignoring corrupt record {} ({})", path.string(), e.what());
        return std::nullopt;
    }
}

std::optional<CacheEntry> DiskCache::put(std::string_view source, std::string_view key, std::string payload, int status) {
    if (payload.size() > m_max_payload) {
        spdlog::warn("cache: payload of {} bytes for '{}' exceeds the {} byte cap; not cached", payload.size(), key,
                     m_max_payload);
        return std::nullopt;
    }
    CacheEntry entry{normalize_query(key), std::string(source), utc_now(), status, std::move(payload)};
    const nlohmann::json record{{"key", entry.key},
                                {"source", entry.source},
                                {"fetched_at", entry.fetched_at},
                                {"status", entry.status},
                                {"payload", entry.payload}};
    const auto path = record_path(source, key);
    std::ostringstream suffix;
    suffix << ".tmp." << std::this_thread::get_id() << '.' << g_tmp_counter.fetch_add(1);
    const auto tmp = std::filesystem::path(path.string() + suffix.str());
    {
        std::ofstream out(tmp);
        if (!out) {
            throw IoError("cannot write cache record " + tmp.string(), Stage::retrieval);
        }
        out << record.dump();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot commit cache record " + path.string(), Stage::retrieval);
    }
    return entry;
}

}  // namespace gvqa::retrieval
