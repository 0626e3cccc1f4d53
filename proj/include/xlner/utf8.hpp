#ifndef XLNER_UTF8_HPP_
#define XLNER_UTF8_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xlner::utf8 {

// Decodes UTF-8 into Unicode scalar values. Returns nullopt on malformed
// input (overlongs, surrogates, truncated sequences, > U+10FFFF).
std::optional<std::u32string> decode(std::string_view text);

bool valid(std::string_view text);

void append(std::string& out, char32_t scalar);

std::string encode(std::u32string_view scalars);

}  // namespace xlner::utf8

#endif  // XLNER_UTF8_HPP_
