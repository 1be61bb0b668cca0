#include "trialogue/session/replay.hpp"

#include "trialogue/errors.hpp"

namespace trialogue::session {

namespace orch = trialogue::orchestration;
using nlohmann::json;

void check_log_sequence(const std::vector<SessionEvent>& events) {
    if (events.empty()) throw CorruptLog("log is empty (missing session_created)");
    if (events.front().type != EventType::session_created || events.front().seq != 1)
        throw CorruptLog("log does not start with session_created at seq 1");
    bool completed = false;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.seq != i + 1)
            throw CorruptLog("sequence gap: expected seq " + std::to_string(i + 1) + ", found " + std::to_string(e.seq));
        if (e.session_id != events.front().session_id) throw CorruptLog("event " + std::to_string(e.seq) + " belongs to another session");
        if (i > 0 && e.type == EventType::session_created) throw CorruptLog("duplicate session_created");
        if (completed && !allowed_after_completion(e.type))
            throw CorruptLog("event " + std::to_string(e.seq) + " (" + std::string(to_string(e.type)) +
                             ") after session_completed");
        completed = completed || e.type == EventType::session_completed;
    }
}

ReplayResult replay_log(const std::vector<SessionEvent>& events) {
    check_log_sequence(events);
    const auto& created = events.front().payload;
    ReplayResult out;
    try {
        out.script = authoring::parse_script(created.at("script").dump());
        out.lesson_id = created.at("lesson_id").get<std::string>();
        out.participant_id = created.value("participant_id", "");
        out.state = orch::initial_state(events.front().session_id,
                                        orch::condition_from_string(created.at("condition").get<std::string>()),
                                        out.script);
    } catch (const json::exception& e) {
        throw CorruptLog(std::string("malformed session_created payload: ") + e.what());
    } catch (const SchemaError& e) {
        throw CorruptLog(std::string("embedded script is invalid: ") + e.what());
    } catch (const VersionError& e) {
        throw CorruptLog(std::string("embedded script is invalid: ") + e.what());
    } catch (const PreconditionError& e) {
        throw CorruptLog(e.what());
    }

    for (const auto& e : events) {
        auto eff = decode_effect(e);
        if (!eff) continue;
        try {
            out.state = orch::apply(std::move(out.state), *eff, out.script);
        } catch (const CorruptLog&) {
            throw;
        } catch (const Error& ex) {
            throw CorruptLog("event " + std::to_string(e.seq) + " (" + std::string(to_string(e.type)) +
                             ") breaks a session invariant: " + ex.what());
        }
    }
    return out;
}

ParticipantRecord derive_record(const std::vector<SessionEvent>& events) {
    check_log_sequence(events);
    const auto& created = events.front().payload;
    ParticipantRecord r;
    r.session_id = events.front().session_id;
    r.participant_id = created.value("participant_id", "");
    r.condition = orch::condition_from_string(created.value("condition", "reading"));

    struct PhaseScore {
        std::optional<double> automatic;
        std::map<std::string, double> manual;
    } pre, post;

    for (const auto& e : events) {
        const auto& p = e.payload;
        if (e.type == EventType::test_submitted) {
            auto& slot = p.value("phase", "") == "pre" ? pre : post;
            if (p.contains("manual_scores")) {
                for (const auto& [item, points] : p["manual_scores"].items()) slot.manual[item] = points.get<double>();
            } else {
                slot.automatic = p.value("auto_score", 0.0);
                slot.manual.clear();
                r.max_score = p.value("max_score", r.max_score);
            }
        } else if (e.type == EventType::survey_submitted) {
            r.survey = p.value("responses", json::object()).get<std::map<std::string, int>>();
            r.attention_pass = p.value("attention_pass", false);
            r.lookup_denied = p.value("lookup_denied", false);
        }
    }
    auto total = [](const PhaseScore& s) -> std::optional<double> {
        if (!s.automatic) return std::nullopt;
        double t = *s.automatic;
        for (const auto& [_, points] : s.manual) t += points;
        return t;
    };
    r.pre_test_score = total(pre);
    r.post_test_score = total(post);
    return r;
}

}  // namespace trialogue::session
