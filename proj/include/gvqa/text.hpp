// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gvqa::text {

std::string_view trim(std::string_view s) noexcept;

/// ASCII lowercase; other bytes pass through.
std::string to_lower(std::string_view s);

/// Whitespace-separated tokens (views into `s`).
std::vector<std::string_view> split_words(std::string_view s);

/// Tokens joined by single spaces.
std::string collapse_whitespace(std::string_view s);

/// Strips ASCII punctuation from both ends of a token.
std::string_view strip_punct(std::string_view word) noexcept;

/// Cuts `s` to at most `max_bytes` without splitting a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) noexcept;

/// Percent-encodes everything except RFC 3986 unreserved characters.
std::string url_encode(std::string_view s);

}  // namespace gvqa::text
