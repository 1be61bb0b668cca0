#include "trialogue/session/event_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <unistd.h>

#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/text.hpp"

namespace trialogue::session {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIndexFile = "index.jsonl";

void append_durably(const fs::path& path, std::string_view data) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < data.size()) {
        auto n = ::write(fd, data.data() + written, data.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw Error("append to " + path.string() + " failed: " + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

std::vector<SessionEvent> parse_log(const fs::path& path) {
    std::vector<SessionEvent> out;
    const auto contents = io::read_file(path);
    for (auto line : text::split_lines(contents)) {
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(from_json_line(line));
        } catch (const SchemaError& e) {
            throw CorruptLog(path.filename().string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

EventStore::EventStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    recover();
}

fs::path EventStore::log_path(const std::string& session_id) const { return dir_ / (session_id + ".jsonl"); }

void EventStore::recover() {
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto& path = entry.path();
        if (path.extension() == ".tmp") {
            fs::remove(path);
            continue;
        }
        if (path.extension() != ".wal") continue;
        auto wal = json::parse(io::read_file(path));
        const auto offset = wal.at("offset").get<std::uintmax_t>();
        const auto data = wal.at("data").get<std::string>();
        auto log = path;
        log.replace_extension(".jsonl");
        if (fs::exists(log) && fs::file_size(log) > offset) fs::resize_file(log, offset);
        if (!fs::exists(log) || fs::file_size(log) == offset) append_durably(log, data);
        fs::remove(path);
    }
}

void EventStore::append_batch(const std::string& session_id, const std::vector<SessionEvent>& batch) {
    if (batch.empty()) return;
    std::string data;
    for (const auto& e : batch) data += to_json_line(e) + "\n";

    const auto log = log_path(session_id);
    const std::uintmax_t offset = fs::exists(log) ? fs::file_size(log) : 0;
    const auto wal = dir_ / (session_id + ".wal");
    io::write_file_atomic(wal, json{{"offset", offset}, {"data", data}}.dump());
    append_durably(log, data);
    fs::remove(wal);
}

std::vector<SessionEvent> EventStore::load(const std::string& session_id) const {
    const auto log = log_path(session_id);
    if (!fs::exists(log)) throw UnknownSession("no log for session " + session_id);
    return parse_log(log);
}

bool EventStore::exists(const std::string& session_id) const { return fs::exists(log_path(session_id)); }

void EventStore::add_index_entry(const json& entry) {
    std::lock_guard lock(index_mutex_);
    append_durably(dir_ / kIndexFile, entry.dump() + "\n");
}

std::vector<json> EventStore::index() const {
    std::lock_guard lock(index_mutex_);
    std::vector<json> out;
    const auto path = dir_ / kIndexFile;
    if (!fs::exists(path)) return out;
    const auto contents = io::read_file(path);
    for (auto line : text::split_lines(contents)) {
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception&) {
            // A torn trailing index line; the session logs remain authoritative.
        }
    }
    return out;
}

std::vector<std::string> EventStore::session_ids() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto& path = entry.path();
        if (path.extension() == ".jsonl" && path.filename() != kIndexFile) out.push_back(path.stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<SessionEvent>> EventStore::read_all(const fs::path& dir) {
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto& path = entry.path();
        if (path.extension() == ".jsonl" && path.filename() != kIndexFile) logs.push_back(path);
    }
    std::sort(logs.begin(), logs.end());
    std::vector<std::vector<SessionEvent>> out;
    for (const auto& p : logs) out.push_back(parse_log(p));
    return out;
}

}  // namespace trialogue::session
