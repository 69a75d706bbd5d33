#pragma once

#include <string>
#include <string_view>

namespace itemgrad::utf8 {

// Throws FormatError on malformed input (overlong forms, surrogates, truncation).
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);
std::string encode(char32_t symbol);

}  // namespace itemgrad::utf8
