#include "trialogue/llm/gateway.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "trialogue/errors.hpp"

namespace trialogue::llm {

void ProviderConfig::validate() const {
    if (timeout_ms <= 0) throw PreconditionError("timeout_ms must be > 0");
    if (max_retries < 0) throw PreconditionError("max_retries must be >= 0");
    if (max_in_flight <= 0) throw PreconditionError("max_in_flight must be > 0");
    if (initial_backoff_ms < 0) throw PreconditionError("initial_backoff_ms must be >= 0");
}

ProviderConfig ProviderConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open provider config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("provider config " + path.string() + ": " + e.what());
    }
    ProviderConfig c;
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.credential_env = j.value("credential_env", c.credential_env);
    c.model_id = j.value("model_id", c.model_id);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
    c.backoff_factor = j.value("backoff_factor", c.backoff_factor);
    c.validate();
    return c;
}

Gateway::Gateway(std::shared_ptr<CompletionProvider> inner, ProviderConfig config, Sleeper sleeper)
    : inner_(std::move(inner)), config_(std::move(config)), sleeper_(std::move(sleeper)) {
    config_.validate();
    if (!inner_) throw PreconditionError("gateway needs a provider");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void Gateway::acquire() {
    std::unique_lock lock(mutex_);
    const auto ticket = next_ticket_++;
    cv_.wait(lock, [&] { return ticket == serving_ && in_flight_ < config_.max_in_flight; });
    ++serving_;
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
    cv_.notify_all();
}

void Gateway::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_all();
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
    request.validate();
    acquire();
    struct Slot {
        Gateway* g;
        ~Slot() { g->release(); }
    } slot{this};

    const auto started = std::chrono::steady_clock::now();
    auto backoff = std::chrono::milliseconds(config_.initial_backoff_ms);
    for (int attempt = 0;; ++attempt) {
        try {
            auto result = inner_->complete(request);
            result.retries = attempt;
            if (result.latency_ms == 0) {
                result.latency_ms = static_cast<std::uint64_t>(
                    std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count());
            }
            return result;
        } catch (const ProviderError& e) {
            if (!e.transient() || attempt >= config_.max_retries) throw;
        }
        sleeper_(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(backoff.count()) * config_.backoff_factor));
    }
}

int Gateway::in_flight() const {
    std::lock_guard lock(mutex_);
    return in_flight_;
}

int Gateway::peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

}  // namespace trialogue::llm
