#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace infdecomp::text {

// Unicode NFC, trimmed, internal whitespace runs collapsed to one space.
std::string normalize(std::string_view s);

std::string collapse_whitespace(std::string_view s);
std::string trim(std::string_view s);

// Full Unicode case folding of a UTF-8 string.
std::string fold_case(std::string_view s);
std::string to_lower(std::string_view s);

// Uppercases the first code point, leaves the rest untouched.
std::string capitalize_first(std::string_view s);

bool is_uppercase_at(std::string_view s, std::size_t byte_pos);

std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace infdecomp::text
