#include "trialogue/llm/completion.hpp"

#include "trialogue/errors.hpp"
#include "trialogue/text.hpp"

namespace trialogue::llm {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw PreconditionError("unknown chat role '" + std::string(name) + "'");
}

void CompletionRequest::validate() const {
    if (messages.empty()) throw PreconditionError("completion request has no messages");
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& m = messages[i];
        if (m.role == Role::system && i != 0)
            throw PreconditionError("system message is only allowed first");
        if (m.role != Role::system && text::trim(m.content).empty())
            throw PreconditionError("empty " + std::string(to_string(m.role)) + " message");
    }
    if (temperature < 0.0) throw PreconditionError("temperature must be >= 0");
    if (max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

std::string CompletionRequest::concatenated_text() const {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += '\n';
        out += m.content;
    }
    return out;
}

}  // namespace trialogue::llm
