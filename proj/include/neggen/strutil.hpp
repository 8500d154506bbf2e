#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace neggen {

// Case-insensitive (ASCII) substring search; npos when absent.
size_t find_ci(std::string_view haystack, std::string_view needle, size_t from = 0);

std::string to_lower(std::string_view text);

bool starts_with_upper(std::string_view text);

// Capitalizes the first character (ASCII).
std::string capitalize(std::string_view text);

struct TokenSpan {
    std::string text;
    int start = 0;
    int end = 0;
};

// Maximal alphanumeric runs with their byte spans, case preserved.
std::vector<TokenSpan> alnum_tokens(std::string_view text);

// Whitespace-separated chunks (for word counting).
std::vector<std::string> whitespace_tokens(std::string_view text);

}  // namespace neggen
