#include "trialogue/llm/scripted_provider.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "trialogue/errors.hpp"

namespace trialogue::llm {

ScriptedProvider::ScriptedProvider(std::vector<Entry> entries, Mode mode)
    : mode_(mode), entries_(std::move(entries)), consumed_(entries_.size(), false) {}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open scripted responses " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scripted responses " + path.string() + ": " + e.what());
    }
    Mode mode = doc.value("mode", "ordered") == "keyed" ? Mode::keyed : Mode::ordered;
    std::vector<Entry> entries;
    for (const auto& e : doc.at("entries"))
        entries.push_back({e.value("match", "*"), e.at("response").get<std::string>()});
    return std::make_shared<ScriptedProvider>(std::move(entries), mode);
}

ScriptedProvider& ScriptedProvider::then(std::string matcher, std::string response) {
    std::lock_guard lock(mutex_);
    entries_.push_back({std::move(matcher), std::move(response)});
    consumed_.push_back(false);
    return *this;
}

bool ScriptedProvider::matches(const std::string& matcher, const std::string& text) {
    return matcher == "*" || text.find(matcher) != std::string::npos;
}

CompletionResult ScriptedProvider::complete(const CompletionRequest& request) {
    request.validate();
    const auto text = request.concatenated_text();
    std::lock_guard lock(mutex_);
    seen_.push_back(request);

    std::size_t hit = entries_.size();
    if (mode_ == Mode::ordered) {
        if (head_ >= entries_.size())
            throw ProviderError(ProviderError::Kind::protocol, "scripted provider exhausted");
        if (!matches(entries_[head_].matcher, text))
            throw ProviderError(ProviderError::Kind::protocol,
                                "scripted entry " + std::to_string(head_) + " expects '" +
                                    entries_[head_].matcher + "'");
        hit = head_++;
    } else {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!consumed_[i] && matches(entries_[i].matcher, text)) {
                hit = i;
                break;
            }
        }
        if (hit == entries_.size())
            throw ProviderError(ProviderError::Kind::protocol, "no scripted entry matches request");
    }
    consumed_[hit] = true;
    CompletionResult result;
    result.content = entries_[hit].response;
    return result;
}

std::size_t ScriptedProvider::remaining() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (bool c : consumed_) n += c ? 0 : 1;
    return n;
}

std::vector<CompletionRequest> ScriptedProvider::requests() const {
    std::lock_guard lock(mutex_);
    return seen_;
}

}  // namespace trialogue::llm
