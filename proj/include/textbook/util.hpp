#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace textbook {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// First eight digest bytes of SHA-256, big-endian. Stable across platforms.
std::uint64_t stable_hash64(std::string_view data);

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace textbook
