#include "trialogue/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace trialogue::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::set<std::string, std::less<>>& stop_words() {
    static const std::set<std::string, std::less<>> words = {
        "about", "also", "because", "been", "being", "both", "does", "each", "from",
        "have", "into", "more", "most", "much", "only", "other", "same", "some", "such",
        "than", "that", "their", "them", "then", "there", "these", "they", "this", "those",
        "through", "very", "what", "when", "where", "which", "while", "will", "with", "would",
        "your"};
    return words;
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::size_t word_count(std::string_view s) { return tokens(s).size(); }

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        auto line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = end + 1;
    }
    return out;
}

std::vector<std::string> content_words(std::string_view s, std::size_t min_length) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (current.size() >= min_length && !stop_words().contains(current)) out.push_back(current);
        current.clear();
    };
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            flush();
    }
    flush();
    return out;
}

double keyword_overlap(std::string_view candidate, std::string_view reference) {
    auto ref_words = content_words(reference);
    std::set<std::string> ref(ref_words.begin(), ref_words.end());
    if (ref.empty()) return 0.0;
    auto cand_words = content_words(candidate);
    std::set<std::string> cand(cand_words.begin(), cand_words.end());
    std::size_t hits = 0;
    for (const auto& w : ref) hits += cand.count(w);
    return static_cast<double>(hits) / static_cast<double>(ref.size());
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace trialogue::text
