#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "trialogue/llm/completion.hpp"

namespace trialogue::llm {

struct ProviderConfig {
    std::string endpoint_url;
    // Name of the environment variable holding the API key, never the key.
    std::string credential_env;
    std::string model_id;
    double temperature = 0.7;
    int timeout_ms = 30000;
    int max_retries = 2;
    int max_in_flight = 8;
    int initial_backoff_ms = 500;
    double backoff_factor = 2.0;

    void validate() const;

    // JSON object with the field names above; missing fields keep defaults.
    static ProviderConfig from_file(const std::filesystem::path& path);
};

// Transport-level policy around a provider: bounded concurrency with a FIFO
// wait queue, and exponential-backoff retries for transient failures
// (timeouts and transport errors). Protocol errors and AuthError propagate
// on the first occurrence.
class Gateway : public CompletionProvider {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<CompletionProvider> inner, ProviderConfig config,
            Sleeper sleeper = {});

    CompletionResult complete(const CompletionRequest& request) override;

    int in_flight() const;
    int peak_in_flight() const;

private:
    void acquire();
    void release();

    std::shared_ptr<CompletionProvider> inner_;
    ProviderConfig config_;
    Sleeper sleeper_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    int in_flight_ = 0;
    int peak_ = 0;
};

}  // namespace trialogue::llm
