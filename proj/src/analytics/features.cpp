#include "trialogue/analytics/features.hpp"

#include "trialogue/errors.hpp"
#include "trialogue/session/replay.hpp"
#include "trialogue/text.hpp"

namespace trialogue::analytics {

using session::EventType;
namespace orch = trialogue::orchestration;

ConversationFeatures extract_features(const std::vector<session::SessionEvent>& log) {
    session::check_log_sequence(log);
    ConversationFeatures f;
    const auto start = log.front().timestamp_ms;
    auto last = start;
    for (const auto& e : log) {
        switch (e.type) {
            case EventType::user_message:
                ++f.n_user_messages;
                f.n_words += text::word_count(e.payload.value("text", ""));
                break;
            case EventType::help_requested: ++f.n_help_requests; break;
            case EventType::revision_requested: ++f.n_revisions; break;
            case EventType::lesson_scrolled: ++f.n_scroll_events; break;
            default: break;
        }
        if (e.type != EventType::test_submitted && e.type != EventType::survey_submitted) last = e.timestamp_ms;
    }
    f.learning_time_min = static_cast<double>(last - start) / 60000.0;
    return f;
}

std::string_view to_string(UsagePattern p) {
    switch (p) {
        case UsagePattern::balanced: return "balanced";
        case UsagePattern::read_conv: return "read_conv";
        case UsagePattern::conv_focused: return "conv_focused";
        case UsagePattern::help_focused: return "help_focused";
    }
    return "balanced";
}

UsagePattern usage_pattern_from_string(std::string_view s) {
    for (auto p : {UsagePattern::balanced, UsagePattern::read_conv, UsagePattern::conv_focused, UsagePattern::help_focused})
        if (to_string(p) == s) return p;
    throw SchemaError("unknown usage pattern '" + std::string(s) + "'");
}

UsagePattern classify_pattern(const ConversationFeatures& f, const PatternThresholds& t) {
    if (f.n_user_messages == 0) throw PreconditionError("usage patterns need at least one user message");
    const double ratio = static_cast<double>(f.n_help_requests) / static_cast<double>(f.n_user_messages);
    if (ratio >= t.help_ratio) return UsagePattern::help_focused;
    if (f.n_scroll_events < t.scroll_min) return UsagePattern::conv_focused;
    if (f.n_help_requests == 0) return UsagePattern::read_conv;
    return UsagePattern::balanced;
}

std::vector<session::ParticipantRecord> filter_participants(const std::vector<session::ParticipantRecord>& records) {
    std::vector<session::ParticipantRecord> out;
    for (const auto& r : records)
        if (r.attention_pass && r.lookup_denied) out.push_back(r);
    return out;
}

std::vector<LintIssue> lint_log(const std::vector<session::SessionEvent>& log) {
    const std::string sid = log.empty() ? "" : log.front().session_id;
    try {
        session::check_log_sequence(log);
    } catch (const CorruptLog& e) {
        return {{sid, 0, "sequence", e.what()}};
    }

    std::vector<LintIssue> out;
    orch::Condition condition;
    try {
        condition = orch::condition_from_string(log.front().payload.value("condition", ""));
    } catch (const Error& e) {
        return {{sid, 1, "sequence", std::string("session_created has no valid condition: ") + e.what()}};
    }
    for (const auto& e : log) {
        const bool banned =
            (condition == orch::Condition::reading && e.type == EventType::agent_message) ||
            (orch::is_qa(condition) &&
             (e.type == EventType::help_requested || e.type == EventType::revision_requested));
        if (banned)
            out.push_back({sid, e.seq, "condition_isolation",
                           std::string(session::to_string(e.type)) + " in a " + std::string(orch::to_string(condition)) +
                               " session"});
    }
    return out;
}

}  // namespace trialogue::analytics
