#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "trialogue/session/event.hpp"
#include "trialogue/session/instruments.hpp"

namespace trialogue::analytics {

struct ConversationFeatures {
    std::size_t n_user_messages = 0;
    std::size_t n_help_requests = 0;
    std::size_t n_revisions = 0;
    std::size_t n_words = 0;  // whitespace tokens over all user messages
    std::size_t n_scroll_events = 0;
    // (last activity event - session_created) / 60000. Test and survey
    // submissions are not activity.
    double learning_time_min = 0.0;

    friend bool operator==(const ConversationFeatures&, const ConversationFeatures&) = default;
};

// Throws CorruptLog when the log breaks its sequence invariants.
ConversationFeatures extract_features(const std::vector<session::SessionEvent>& log);

enum class UsagePattern { balanced, read_conv, conv_focused, help_focused };
std::string_view to_string(UsagePattern p);
UsagePattern usage_pattern_from_string(std::string_view s);

struct PatternThresholds {
    double help_ratio = 0.5;
    std::size_t scroll_min = 3;
};

// help_focused if helps / messages >= help_ratio, else conv_focused if
// scrolls < scroll_min, else read_conv if helps == 0, else balanced.
// Throws PreconditionError when there are no user messages.
UsagePattern classify_pattern(const ConversationFeatures& f, const PatternThresholds& t = {});

// Keeps participants that passed every attention check and answered the
// lookup item "strongly disagree".
std::vector<session::ParticipantRecord> filter_participants(const std::vector<session::ParticipantRecord>& records);

struct LintIssue {
    std::string session_id;
    std::uint64_t seq = 0;  // 0 when the issue concerns the log as a whole
    std::string code;       // "sequence" or "condition_isolation"
    std::string message;
};

// Sequence invariants plus condition isolation: reading logs carry no
// agent_message, QA logs no help_requested or revision_requested.
std::vector<LintIssue> lint_log(const std::vector<session::SessionEvent>& log);

}  // namespace trialogue::analytics
