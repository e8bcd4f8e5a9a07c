// SPDX-License-Identifier: Apache-2.0
#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <vector>

namespace gvqa {

const char* stage_name(Stage stage) noexcept {
    switch (stage) {
        case Stage::config: return "config";
        case Stage::dataset: return "dataset";
        case Stage::imaging: return "imaging";
        case Stage::backend: return "backend";
        case Stage::retrieval: return "retrieval";
        case Stage::ragcore: return "ragcore";
        case Stage::guardrails: return "guardrails";
        case Stage::eval: return "eval";
        case Stage::io: return "io";
    }
    return "unknown";
}

int exit_code_for(Stage stage) noexcept {
    switch (stage) {
        case Stage::config: return 2;
        case Stage::dataset:
        case Stage::imaging: return 3;
        case Stage::backend:
        case Stage::ragcore: return 4;
        case Stage::retrieval: return 5;
        default: return 1;
    }
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) noexcept {
    for (std::uint8_t c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                        static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::string base64_encode(std::string_view bytes) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw ValidationError(Stage::backend, "base64 payload length is not a multiple of 4");
    }
    std::string out(3 * (text.size() / 4), '\0');
    const int written = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                        reinterpret_cast<const unsigned char*>(text.data()),
                                        static_cast<int>(text.size()));
    if (written < 0) {
        throw ValidationError(Stage::backend, "malformed base64 payload");
    }
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') {
        ++pad;
        if (text.size() >= 2 && text[text.size() - 2] == '=') {
            ++pad;
        }
    }
    out.resize(static_cast<std::size_t>(written) - pad);
    return out;
}

}  // namespace gvqa
