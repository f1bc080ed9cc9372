#pragma once

#include <string>

namespace knowrank::util {

/// Hex-encoded SHA-256 of the given bytes.
std::string sha256_hex(const std::string& data);

/// Hex-encoded SHA-256 of a file's contents. Throws IoError if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace knowrank::util
