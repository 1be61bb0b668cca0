#include "trialogue/session/event.hpp"

#include "trialogue/errors.hpp"

namespace trialogue::session {

using nlohmann::json;
namespace orch = trialogue::orchestration;

namespace {

constexpr std::pair<EventType, std::string_view> kTypes[] = {
    {EventType::session_created, "session_created"},
    {EventType::user_message, "user_message"},
    {EventType::agent_message, "agent_message"},
    {EventType::help_requested, "help_requested"},
    {EventType::revision_requested, "revision_requested"},
    {EventType::expectation_covered, "expectation_covered"},
    {EventType::question_advanced, "question_advanced"},
    {EventType::lesson_scrolled, "lesson_scrolled"},
    {EventType::session_completed, "session_completed"},
    {EventType::test_submitted, "test_submitted"},
    {EventType::survey_submitted, "survey_submitted"},
    {EventType::judgment_degraded, "judgment_degraded"},
};

}  // namespace

std::string_view to_string(EventType t) {
    for (const auto& [v, name] : kTypes)
        if (v == t) return name;
    return "unknown";
}

EventType event_type_from_string(std::string_view s) {
    for (const auto& [v, name] : kTypes)
        if (name == s) return v;
    throw SchemaError("unknown event type '" + std::string(s) + "'");
}

bool allowed_after_completion(EventType t) {
    return t == EventType::test_submitted || t == EventType::survey_submitted;
}

json to_json(const SessionEvent& event) {
    return {{"session_id", event.session_id},
            {"seq", event.seq},
            {"timestamp_ms", event.timestamp_ms},
            {"type", to_string(event.type)},
            {"payload", event.payload}};
}

SessionEvent event_from_json(const json& j) {
    try {
        SessionEvent e;
        e.session_id = j.at("session_id").get<std::string>();
        e.seq = j.at("seq").get<std::uint64_t>();
        e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        e.type = event_type_from_string(j.at("type").get<std::string>());
        e.payload = j.at("payload");
        if (!e.payload.is_object()) throw SchemaError("event payload must be an object");
        return e;
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("malformed event: ") + ex.what());
    }
}

std::string to_json_line(const SessionEvent& event) { return to_json(event).dump(); }

SessionEvent from_json_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("event line is not JSON: ") + ex.what());
    }
    return event_from_json(j);
}

json to_json(const orch::DialogueAction& a) {
    json j = {{"actor", orch::to_string(a.actor)}, {"kind", orch::to_string(a.kind)}, {"text", a.text}};
    if (a.question_id) j["question_id"] = *a.question_id;
    if (a.target_expectation_id) j["target_expectation_id"] = *a.target_expectation_id;
    return j;
}

json to_json(const orch::SessionState& s) {
    json coverage = json::object();
    for (const auto& [id, c] : s.coverage) coverage[id] = c == orch::Coverage::covered ? "covered" : "pending";
    json chat = json::array();
    for (const auto& entry : s.chat_log) chat.push_back({{"actor", orch::to_string(entry.actor)}, {"text", entry.text}});
    return {{"session_id", s.session_id},
            {"condition", orch::to_string(s.condition)},
            {"script_id", s.script_id},
            {"question_cursor", s.question_cursor},
            {"coverage", std::move(coverage)},
            {"help_count", s.help_count},
            {"revision_count", s.revision_count},
            {"phase", orch::to_string(s.phase)},
            {"chat_log", std::move(chat)}};
}

std::pair<EventType, json> encode_effect(const orch::Effect& effect) {
    struct Encoder {
        std::pair<EventType, json> operator()(const orch::effect::LearnerSaid& e) const {
            return {EventType::user_message, {{"text", e.text}}};
        }
        std::pair<EventType, json> operator()(const orch::effect::AgentSaid& e) const {
            return {EventType::agent_message, to_json(e.action)};
        }
        std::pair<EventType, json> operator()(const orch::effect::ExpectationCovered& e) const {
            return {EventType::expectation_covered, {{"expectation_id", e.expectation_id}}};
        }
        std::pair<EventType, json> operator()(const orch::effect::HelpRequested&) const {
            return {EventType::help_requested, json::object()};
        }
        std::pair<EventType, json> operator()(const orch::effect::RevisionRequested& e) const {
            return {EventType::revision_requested, {{"note", e.note}}};
        }
        std::pair<EventType, json> operator()(const orch::effect::QuestionAdvanced&) const {
            return {EventType::question_advanced, json::object()};
        }
        std::pair<EventType, json> operator()(const orch::effect::SessionCompleted&) const {
            return {EventType::session_completed, json::object()};
        }
        std::pair<EventType, json> operator()(const orch::effect::JudgmentDegraded& e) const {
            return {EventType::judgment_degraded, {{"reason", e.reason}}};
        }
    };
    return std::visit(Encoder{}, effect);
}

std::optional<orch::Effect> decode_effect(const SessionEvent& event) {
    const auto& p = event.payload;
    try {
        switch (event.type) {
            case EventType::user_message:
                return orch::effect::LearnerSaid{p.at("text").get<std::string>()};
            case EventType::agent_message: {
                orch::DialogueAction a;
                a.actor = orch::actor_from_string(p.at("actor").get<std::string>());
                a.kind = orch::action_kind_from_string(p.at("kind").get<std::string>());
                a.text = p.at("text").get<std::string>();
                if (p.contains("question_id")) a.question_id = p["question_id"].get<std::string>();
                if (p.contains("target_expectation_id"))
                    a.target_expectation_id = p["target_expectation_id"].get<std::string>();
                return orch::effect::AgentSaid{std::move(a)};
            }
            case EventType::expectation_covered:
                return orch::effect::ExpectationCovered{p.at("expectation_id").get<std::string>()};
            case EventType::help_requested:
                return orch::effect::HelpRequested{};
            case EventType::revision_requested:
                return orch::effect::RevisionRequested{p.value("note", "")};
            case EventType::question_advanced:
                return orch::effect::QuestionAdvanced{};
            case EventType::session_completed:
                return orch::effect::SessionCompleted{};
            case EventType::judgment_degraded:
                return orch::effect::JudgmentDegraded{p.value("reason", "")};
            case EventType::session_created:
            case EventType::lesson_scrolled:
            case EventType::test_submitted:
            case EventType::survey_submitted:
                return std::nullopt;
        }
    } catch (const json::exception& ex) {
        throw CorruptLog("event " + std::to_string(event.seq) + " has a malformed payload: " + ex.what());
    } catch (const PreconditionError& ex) {
        throw CorruptLog("event " + std::to_string(event.seq) + ": " + ex.what());
    }
    return std::nullopt;
}

}  // namespace trialogue::session
