#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "trialogue/llm/completion.hpp"

namespace trialogue::llm {

// Deterministic test double. Each entry pairs a matcher with a canned
// response; "*" matches anything, any other matcher must occur as a
// substring of the concatenated request text.
//
// In `ordered` mode entries are consumed strictly front to back and the
// head entry must match. In `keyed` mode the first unconsumed entry whose
// matcher matches is consumed. Either way a request nothing answers is a
// ProviderError{protocol}.
class ScriptedProvider : public CompletionProvider {
public:
    enum class Mode { ordered, keyed };

    struct Entry {
        std::string matcher;
        std::string response;
    };

    explicit ScriptedProvider(std::vector<Entry> entries = {}, Mode mode = Mode::ordered);

    // {"mode": "ordered"|"keyed", "entries": [{"match": "...", "response": "..."}]}
    static std::shared_ptr<ScriptedProvider> from_file(const std::filesystem::path& path);

    ScriptedProvider& then(std::string matcher, std::string response);
    ScriptedProvider& then(std::string response) { return then("*", std::move(response)); }

    CompletionResult complete(const CompletionRequest& request) override;

    std::size_t remaining() const;
    std::vector<CompletionRequest> requests() const;

private:
    static bool matches(const std::string& matcher, const std::string& text);

    mutable std::mutex mutex_;
    Mode mode_;
    std::vector<Entry> entries_;
    std::vector<bool> consumed_;
    std::size_t head_ = 0;
    std::vector<CompletionRequest> seen_;
};

}  // namespace trialogue::llm
