#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialogue/authoring/pipeline.hpp"
#include "trialogue/authoring/script.hpp"
#include "trialogue/llm/completion.hpp"
#include "trialogue/llm/templates.hpp"
#include "trialogue/orchestration/engine.hpp"
#include "trialogue/session/event.hpp"
#include "trialogue/session/event_store.hpp"
#include "trialogue/session/instruments.hpp"

namespace trialogue::session {

// Who wrote a script. TQA sessions need a teacher script; LQA and the
// conversational condition need a generated one.
enum class ScriptOrigin { teacher, generated };
std::string_view to_string(ScriptOrigin o);
ScriptOrigin script_origin_from_string(std::string_view s);

struct ServiceOptions {
    // Server clock in epoch milliseconds; client timestamps are never used.
    std::function<std::int64_t()> clock;
    llm::TemplateSet templates = llm::TemplateSet::defaults();
    orchestration::EngineOptions engine;
    authoring::ExpectationBounds bounds;
    // When false, QA answers are judged by keyword overlap only.
    bool provider_judges_qa = true;
};

struct SessionDescriptor {
    std::string session_id;
    orchestration::Condition condition = orchestration::Condition::reading;
    std::string script_id;
    std::string lesson_id;
    std::string participant_id;
    std::vector<orchestration::DialogueAction> actions;
    std::vector<SessionEvent> events;
};

// A learner-side event. Only user_message, help_requested, lesson_scrolled,
// session_completed (reading only), test_submitted (answers, or
// {"phase", "manual_scores"} for free-form grading) and survey_submitted are
// accepted.
struct InboundEvent {
    EventType type = EventType::lesson_scrolled;
    nlohmann::json payload = nlohmann::json::object();
    // When set, the append only succeeds if the log still ends at this seq.
    std::optional<std::uint64_t> expected_seq;
};

struct AppendResult {
    std::vector<SessionEvent> events;
    std::vector<orchestration::DialogueAction> actions;
    orchestration::SessionState state;
};

struct SessionView {
    orchestration::SessionState state;
    std::vector<SessionEvent> events;
    std::string lesson_id;
    std::string participant_id;
};

// Event-sourced session administration over a data directory:
//
//   <data>/lessons/<id>.json            {lesson_id, title, body}
//   <data>/scripts/<id>.json            tutoring script files
//   <data>/scripts/origins.json         {script_id: "teacher"|"generated"}
//   <data>/instruments/test_A.json      pre/post test forms A and B
//   <data>/instruments/test_B.json
//   <data>/instruments/survey.json
//   <data>/sessions/<id>.jsonl          one event per line
//   <data>/sessions/index.jsonl
//
// Appends to one session are linearized by compare-and-append on the log
// length: provider calls run without any lock, and a batch commits only if
// no other batch landed meanwhile (otherwise SequenceConflict).
class SessionService {
public:
    SessionService(std::filesystem::path data_dir, std::shared_ptr<llm::CompletionProvider> provider,
                   ServiceOptions options = {});
    ~SessionService();

    void put_lesson(const authoring::LessonText& lesson);
    authoring::LessonText lesson(const std::string& lesson_id) const;

    void put_script(const authoring::TutoringScript& script, ScriptOrigin origin);
    std::pair<authoring::TutoringScript, ScriptOrigin> script(const std::string& script_id) const;

    // Runs the authoring pipeline with the service provider and stores the
    // result as a generated script.
    authoring::TutoringScript generate_script(const std::string& lesson_id, std::size_t question_count);

    void set_test_form(const std::string& form, const TestInstrument& instrument);
    void set_survey(const SurveyInstrument& survey);

    SessionDescriptor create_session(orchestration::Condition condition, const std::string& script_id,
                                     const std::string& lesson_id, const std::string& participant_id);

    AppendResult append_event(const std::string& session_id, const InboundEvent& event);

    SessionView get(const std::string& session_id) const;

    // Rebuilds state from the persisted log alone.
    orchestration::SessionState replay(const std::string& session_id) const;

    std::vector<std::string> session_ids() const;
    const std::filesystem::path& data_dir() const { return data_dir_; }
    const EventStore& store() const { return *store_; }

private:
    struct Snapshot;
    struct Slot;

    std::shared_ptr<Slot> slot(const std::string& session_id) const;
    nlohmann::json test_payload(const Snapshot& snap, const nlohmann::json& inbound) const;
    std::int64_t now() const;

    std::filesystem::path data_dir_;
    std::shared_ptr<llm::CompletionProvider> provider_;
    ServiceOptions options_;
    std::unique_ptr<EventStore> store_;

    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, authoring::LessonText> lessons_;
    std::map<std::string, std::pair<authoring::TutoringScript, ScriptOrigin>> scripts_;
    std::map<std::string, TestInstrument> test_forms_;
    std::optional<SurveyInstrument> survey_;

    mutable std::mutex slots_mutex_;
    mutable std::map<std::string, std::shared_ptr<Slot>> slots_;
    std::mutex create_mutex_;
    std::size_t created_count_ = 0;
};

}  // namespace trialogue::session
