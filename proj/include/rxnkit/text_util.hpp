#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rxnkit {

/// Unicode NFC followed by whitespace collapse: runs of Unicode whitespace
/// become a single ASCII space, leading and trailing whitespace is removed.
/// Invalid UTF-8 sequences are replaced by U+FFFD.
std::string normalize_text(std::string_view s);

/// Decodes UTF-8 into code points (invalid sequences become U+FFFD).
std::u32string to_code_points(std::string_view s);

/// Plain Levenshtein distance over code points (unit costs).
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Levenshtein(a', b') / max(|a'|, |b'|) on normalized inputs; 0 when both
/// are empty after normalization.
double normalized_edit_distance(std::string_view a, std::string_view b);

std::vector<std::string> split_whitespace(std::string_view s);

std::string trim(std::string_view s);

}  // namespace rxnkit
