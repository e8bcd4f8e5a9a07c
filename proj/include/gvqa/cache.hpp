// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace gvqa::retrieval {

struct CacheEntry {
    std::string key;     ///< normalized query
    std::string source;  ///< e.g. "wikipedia-search"
    std::string fetched_at;  ///< UTC, ISO 8601
    int status = 200;
    std::string payload;  ///< raw response body

    bool operator==(const CacheEntry&) const = default;
};

/// One JSON record file per (source, normalized key), named by the SHA-256 of
/// both. Writes go through a temp file and a rename, so concurrent readers see
/// either the old or the new record (last write wins).
class DiskCache {
public:
    static constexpr std::size_t kDefaultMaxPayload = 8u << 20;

    explicit DiskCache(std::filesystem::path dir, std::size_t max_payload_bytes = kDefaultMaxPayload);

    /// Absent or unreadable records are a miss; corrupt ones also log a warning.
    std::optional<CacheEntry> get(std::string_view source, std::string_view key) const;

    /// Returns the stored entry, or nullopt when the payload exceeds the cap.
    std::optional<CacheEntry> put(std::string_view source, std::string_view key, std::string payload, int status = 200);

    std::filesystem::path record_path(std::string_view source, std::string_view key) const;
    const std::filesystem::path& dir() const noexcept { return m_dir; }

private:
    std::filesystem::path m_dir;
    std::size_t m_max_payload;
};

}  // namespace gvqa::retrieval
