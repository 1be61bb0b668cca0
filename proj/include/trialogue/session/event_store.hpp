#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialogue/session/event.hpp"

namespace trialogue::session {

// Append-only storage: one `<session_id>.jsonl` file per session plus an
// `index.jsonl` listing sessions in creation order.
//
// A batch is first written whole to `<session_id>.wal` (atomically, via
// rename) together with the log offset it starts at, then appended to the
// log, then the WAL is removed. Opening the store redoes any batch whose WAL
// survived a crash, so a torn batch is never observed.
class EventStore {
public:
    explicit EventStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void append_batch(const std::string& session_id, const std::vector<SessionEvent>& batch);
    std::vector<SessionEvent> load(const std::string& session_id) const;
    bool exists(const std::string& session_id) const;

    void add_index_entry(const nlohmann::json& entry);
    std::vector<nlohmann::json> index() const;

    // Session ids that have a log file, sorted.
    std::vector<std::string> session_ids() const;

    std::filesystem::path log_path(const std::string& session_id) const;

    // Reads every `<id>.jsonl` of a data directory without recovery or locking.
    static std::vector<std::vector<SessionEvent>> read_all(const std::filesystem::path& dir);

private:
    void recover();

    std::filesystem::path dir_;
    mutable std::mutex index_mutex_;
};

}  // namespace trialogue::session
