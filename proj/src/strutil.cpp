#include "neggen/strutil.hpp"

#include <cctype>

namespace neggen {

size_t find_ci(std::string_view haystack, std::string_view needle, size_t from) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        size_t j = 0;
        while (j < needle.size() &&
               std::tolower(static_cast<unsigned char>(haystack[i + j])) ==
                   std::tolower(static_cast<unsigned char>(needle[j]))) {
            ++j;
        }
        if (j == needle.size()) return i;
    }
    return std::string_view::npos;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with_upper(std::string_view text) {
    return !text.empty() && std::isupper(static_cast<unsigned char>(text.front()));
}

std::string capitalize(std::string_view text) {
    std::string out(text);
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

std::vector<TokenSpan> alnum_tokens(std::string_view text) {
    std::vector<TokenSpan> out;
    int start = -1;
    for (int i = 0; i <= static_cast<int>(text.size()); ++i) {
        bool alnum = i < static_cast<int>(text.size()) &&
                     std::isalnum(static_cast<unsigned char>(text[i]));
        if (alnum && start < 0) start = i;
        if (!alnum && start >= 0) {
            out.push_back({std::string(text.substr(start, i - start)), start, i});
            start = -1;
        }
    }
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

}  // namespace neggen
