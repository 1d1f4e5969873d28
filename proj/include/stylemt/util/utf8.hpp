#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylemt {

struct Utf8Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decodes a UTF-8 byte string into codepoints. Rejects overlong forms,
// surrogates, truncated sequences, and codepoints above U+10FFFF.
std::vector<char32_t> utf8_decode(const std::string& bytes);

std::string utf8_encode(const std::vector<char32_t>& codepoints);
void utf8_append(std::string& out, char32_t cp);

bool utf8_valid(const std::string& bytes);

}  // namespace stylemt
