#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the matching, parsing and scoring code.
// All case folding is ASCII-only; non-ASCII bytes pass through untouched.
namespace tabgr::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Number of Unicode code points in a UTF-8 string. Invalid lead bytes count
/// as one code point each.
std::size_t utf8_length(std::string_view s);

/// Matching-time normalization: lowercase, collapse runs of whitespace to a
/// single space, and strip leading/trailing ASCII punctuation and spaces.
std::string normalize_for_match(std::string_view s);

/// True if `needle` occurs in `haystack` with non-alphanumeric characters (or
/// string ends) on both sides.
bool contains_term(std::string_view haystack, std::string_view needle);

}  // namespace tabgr::text
