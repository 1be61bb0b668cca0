#include "trialogue/llm/prompt.hpp"

#include <cctype>
#include <optional>

#include "trialogue/errors.hpp"
#include "trialogue/text.hpp"

namespace trialogue::llm {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of the placeholder starting at tmpl[pos] == '{', or 0 if the brace
// does not open a placeholder.
std::size_t placeholder_length(std::string_view tmpl, std::size_t pos) {
    std::size_t i = pos + 1;
    if (i >= tmpl.size() || !ident_start(tmpl[i])) return 0;
    while (i < tmpl.size() && ident_char(tmpl[i])) ++i;
    if (i >= tmpl.size() || tmpl[i] != '}') return 0;
    return i - pos + 1;
}

template <typename OnLiteral, typename OnPlaceholder>
void scan(std::string_view tmpl, OnLiteral&& literal, OnPlaceholder&& placeholder) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            literal('{');
            i += 2;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            literal('}');
            i += 2;
        } else if (c == '{') {
            if (auto len = placeholder_length(tmpl, i)) {
                placeholder(tmpl.substr(i + 1, len - 2));
                i += len;
            } else {
                literal(c);
                ++i;
            }
        } else {
            literal(c);
            ++i;
        }
    }
}

std::optional<Role> section_marker(std::string_view line) {
    auto t = text::trim(line);
    if (t == "[system]") return Role::system;
    if (t == "[user]") return Role::user;
    if (t == "[assistant]") return Role::assistant;
    return std::nullopt;
}

}  // namespace

std::set<std::string> placeholders(std::string_view tmpl) {
    std::set<std::string> out;
    scan(tmpl, [](char) {}, [&](std::string_view name) { out.emplace(name); });
    return out;
}

std::string render_text(std::string_view tmpl, const Bindings& bindings) {
    for (const auto& name : placeholders(tmpl))
        if (!bindings.contains(name)) throw MissingBinding(name);
    std::string out;
    out.reserve(tmpl.size());
    scan(
        tmpl, [&](char c) { out.push_back(c); },
        [&](std::string_view name) { out += bindings.find(name)->second; });
    return out;
}

std::vector<ChatMessage> render_prompt(std::string_view tmpl, const Bindings& bindings) {
    // Validate everything up front so a failure never leaves half a prompt.
    for (const auto& name : placeholders(tmpl))
        if (!bindings.contains(name)) throw MissingBinding(name);

    std::vector<ChatMessage> out;
    Role role = Role::user;
    std::string section;
    auto flush = [&] {
        auto rendered = render_text(section, bindings);
        auto body = text::trim(rendered);
        if (!body.empty()) out.push_back({role, std::string(body)});
        section.clear();
    };
    for (auto line : text::split_lines(tmpl)) {
        if (auto marker = section_marker(line)) {
            flush();
            role = *marker;
            continue;
        }
        section.append(line);
        section.push_back('\n');
    }
    flush();
    return out;
}

}  // namespace trialogue::llm
