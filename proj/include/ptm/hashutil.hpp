#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ptm {

// hex-encoded SHA-256 of a byte string
std::string sha256_hex(std::string_view data);

// hex-encoded SHA-256 of a file's contents; throws std::runtime_error if unreadable
std::string sha256_file_hex(const std::filesystem::path& file);

// FNV-1a 64-bit, used for feature hashing (stable across platforms)
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ptm
