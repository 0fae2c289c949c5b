#pragma once

#include <cstdint>
#include <string>

namespace geobench {

// SHA-256 hex digest of a byte string (OpenSSL EVP under the hood).
std::string sha256_hex(const std::string& bytes);

// Digest of a file's contents; throws std::runtime_error when unreadable.
std::string sha256_file(const std::string& path);

}  // namespace geobench
