#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trialogue/llm/completion.hpp"

namespace trialogue::llm {

using Bindings = std::map<std::string, std::string, std::less<>>;

// Placeholders are `{identifier}` with identifier = [A-Za-z_][A-Za-z0-9_]*.
// `{{` and `}}` produce literal braces; any other brace is copied through.
// Substitution is single pass, so braces inside bound values are never
// expanded again.
std::set<std::string> placeholders(std::string_view tmpl);

// Renders the whole template or throws MissingBinding for the first
// placeholder without a binding.
std::string render_text(std::string_view tmpl, const Bindings& bindings);

// A template may be split into messages by lines consisting solely of
// `[system]`, `[user]` or `[assistant]`. Text before the first marker (or the
// whole template when there is none) becomes a user message. Sections that
// render to blank text are dropped.
std::vector<ChatMessage> render_prompt(std::string_view tmpl, const Bindings& bindings);

}  // namespace trialogue::llm
