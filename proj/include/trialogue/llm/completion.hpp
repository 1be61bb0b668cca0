#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trialogue::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::string model_id;

    // Throws PreconditionError when the request breaks its invariants.
    void validate() const;

    // All message contents joined by newlines; what scripted matchers see.
    std::string concatenated_text() const;
};

struct CompletionResult {
    std::string content;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t latency_ms = 0;
    int retries = 0;
};

// Anything that can answer a chat completion request. Implementations
// throw ProviderError / AuthError on failure and must be safe to call from
// several threads at once.
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

}  // namespace trialogue::llm
