#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace trialogue::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Whitespace-separated tokens.
std::vector<std::string_view> tokens(std::string_view s);
std::size_t word_count(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

// Lower-cased alphanumeric words of at least `min_length` characters, minus a
// small stop list. Used by the keyword-overlap heuristics.
std::vector<std::string> content_words(std::string_view s, std::size_t min_length = 4);

// Fraction of the distinct content words of `reference` that occur in
// `candidate`. 0 when the reference has no content words.
double keyword_overlap(std::string_view candidate, std::string_view reference);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace trialogue::text
