#include "trialogue/llm/http_provider.hpp"

#include <chrono>
#include <cstdlib>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "trialogue/errors.hpp"

namespace trialogue::llm {

namespace {

using Kind = ProviderError::Kind;

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& url = config_.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw PreconditionError("endpoint_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

CompletionResult HttpProvider::complete(const CompletionRequest& request) {
    request.validate();

    nlohmann::json body;
    body["model"] = request.model_id.empty() ? config_.model_id : request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});

    httplib::Headers headers;
    if (!config_.credential_env.empty()) {
        const char* key = std::getenv(config_.credential_env.c_str());
        if (key == nullptr || *key == '\0')
            throw AuthError("credential variable " + config_.credential_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(base_);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
            throw ProviderError(Kind::timeout, "provider timed out: " + httplib::to_string(err));
        throw ProviderError(Kind::transport, "provider transport failure: " + httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403)
        throw AuthError("provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 408 || res->status == 429 || res->status >= 500)
        throw ProviderError(Kind::transport, "provider HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw ProviderError(Kind::protocol, "provider HTTP " + std::to_string(res->status));

    CompletionResult result;
    try {
        auto reply = nlohmann::json::parse(res->body);
        result.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
            result.prompt_tokens = usage->value("prompt_tokens", 0ULL);
            result.completion_tokens = usage->value("completion_tokens", 0ULL);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(Kind::protocol, std::string("malformed provider response: ") + e.what());
    }
    result.latency_ms = static_cast<std::uint64_t>(elapsed.count());
    return result;
}

}  // namespace trialogue::llm
