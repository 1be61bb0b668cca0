#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialogue/orchestration/state.hpp"

namespace trialogue::session {

enum class EventType {
    session_created,
    user_message,
    agent_message,
    help_requested,
    revision_requested,
    expectation_covered,
    question_advanced,
    lesson_scrolled,
    session_completed,
    test_submitted,
    survey_submitted,
    judgment_degraded,
};

std::string_view to_string(EventType t);
EventType event_type_from_string(std::string_view s);

// Test and survey submissions are the only events accepted after completion.
bool allowed_after_completion(EventType t);

struct SessionEvent {
    std::string session_id;
    std::uint64_t seq = 0;
    std::int64_t timestamp_ms = 0;
    EventType type = EventType::session_created;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

// One JSONL line (without the trailing newline), keys sorted.
std::string to_json_line(const SessionEvent& event);
SessionEvent from_json_line(std::string_view line);

nlohmann::json to_json(const SessionEvent& event);
SessionEvent event_from_json(const nlohmann::json& j);

// Type and payload for an orchestration effect.
std::pair<EventType, nlohmann::json> encode_effect(const orchestration::Effect& effect);

// The effect an event records, or nullopt for events that do not change
// dialogue state (creation, navigation, tests, surveys).
std::optional<orchestration::Effect> decode_effect(const SessionEvent& event);

nlohmann::json to_json(const orchestration::DialogueAction& action);
nlohmann::json to_json(const orchestration::SessionState& state);

}  // namespace trialogue::session
