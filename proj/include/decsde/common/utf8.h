#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace decsde::utf8 {

// Splits UTF-8 text into unicode scalar values, each returned as its own
// encoded substring. Invalid lead bytes are kept as one-byte symbols.
std::vector<std::string> split_chars(std::string_view text);

// Number of unicode scalar values in text.
size_t length(std::string_view text);

// Collapses runs of ASCII whitespace to single spaces and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Whitespace tokenization (ASCII whitespace).
std::vector<std::string> split_words(std::string_view text);

}  // namespace decsde::utf8
