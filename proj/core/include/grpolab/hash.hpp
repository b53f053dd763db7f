#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace grpolab {

/// FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Seeded token hash used for feature-bucket assignment. Independent seeds
/// give independent bucket layouts.
std::uint64_t token_hash(std::string_view token, std::uint64_t seed);

/// FNV-1a of a file's full contents, hex-encoded. Throws IoError if the
/// file cannot be read.
std::string file_hash_hex(const std::string& path);

std::string to_hex(std::uint64_t value);

}  // namespace grpolab
