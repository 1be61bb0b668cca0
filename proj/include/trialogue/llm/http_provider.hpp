#pragma once

#include <string>

#include "trialogue/llm/completion.hpp"
#include "trialogue/llm/gateway.hpp"

namespace trialogue::llm {

// Speaks the common HTTP JSON chat-completion protocol: POSTs
// {model, messages, temperature, max_tokens} and returns the first choice's
// message content. The API key is read from the environment variable named
// in the config at call time and only ever placed in the Authorization header.
class HttpProvider : public CompletionProvider {
public:
    explicit HttpProvider(ProviderConfig config);

    CompletionResult complete(const CompletionRequest& request) override;

private:
    ProviderConfig config_;
    std::string base_;
    std::string path_;
};

}  // namespace trialogue::llm
