#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mgtd::digest {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

// Digest of a file's raw bytes. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mgtd::digest
