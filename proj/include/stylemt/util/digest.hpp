#pragma once

#include <string>

namespace stylemt {

// SHA-256 hex digest of a byte string / file contents (OpenSSL EVP).
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace stylemt
