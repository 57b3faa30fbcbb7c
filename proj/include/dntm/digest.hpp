#pragma once

#include <string>

namespace dntm {

// Lowercase hex SHA-256 of a file's bytes. Throws std::runtime_error on
// I/O failure.
std::string sha256_hex_file(const std::string& path);

}  // namespace dntm
