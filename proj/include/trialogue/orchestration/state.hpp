#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trialogue/authoring/script.hpp"

namespace trialogue::orchestration {

enum class Condition { reading, qa_teacher, qa_generated, cts };
enum class Phase { active, completed, abandoned };
enum class Actor { learner, ruffle, riley };
enum class ActionKind { ask_question, follow_up, encourage, help_response, revision_request, qa_feedback, closing };
enum class Coverage { pending, covered };

std::string_view to_string(Condition c);
std::string_view to_string(Phase p);
std::string_view to_string(Actor a);
std::string_view to_string(ActionKind k);
Condition condition_from_string(std::string_view s);
Actor actor_from_string(std::string_view s);
ActionKind action_kind_from_string(std::string_view s);

inline bool is_qa(Condition c) { return c == Condition::qa_teacher || c == Condition::qa_generated; }

struct ChatEntry {
    Actor actor = Actor::learner;
    std::string text;

    friend bool operator==(const ChatEntry&, const ChatEntry&) = default;
};

struct SessionState {
    std::string session_id;
    Condition condition = Condition::cts;
    std::string script_id;
    std::size_t question_cursor = 0;
    std::map<std::string, Coverage> coverage;
    std::size_t help_count = 0;
    std::size_t revision_count = 0;
    Phase phase = Phase::active;
    std::vector<ChatEntry> chat_log;

    // Expectation ids of the current question still pending, in script order.
    std::vector<std::string> pending_for_current(const authoring::TutoringScript& script) const;
    std::size_t covered_count() const;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct DialogueAction {
    Actor actor = Actor::ruffle;
    ActionKind kind = ActionKind::ask_question;
    std::string text;
    std::optional<std::string> question_id;
    std::optional<std::string> target_expectation_id;

    friend bool operator==(const DialogueAction&, const DialogueAction&) = default;
};

// Ruffle asks, follows up, encourages, gives QA feedback and closes; Riley
// only helps and requests revisions. The learner never appears as an action.
bool valid_pairing(Actor actor, ActionKind kind);

// Atomic state changes. Every transition is expressed as a sequence of
// effects folded through apply(); the session log stores the same sequence,
// which is what makes replay exact.
namespace effect {
struct LearnerSaid {
    std::string text;
};
struct AgentSaid {
    DialogueAction action;
};
struct ExpectationCovered {
    std::string expectation_id;
};
struct HelpRequested {};
struct RevisionRequested {
    std::string note;
};
struct QuestionAdvanced {};
struct SessionCompleted {};
struct JudgmentDegraded {
    std::string reason;
};
}  // namespace effect

using Effect = std::variant<effect::LearnerSaid, effect::AgentSaid, effect::ExpectationCovered,
                            effect::HelpRequested, effect::RevisionRequested, effect::QuestionAdvanced,
                            effect::SessionCompleted, effect::JudgmentDegraded>;

// Fresh state for a session; cts sessions start with every expectation of
// the script pending.
SessionState initial_state(std::string session_id, Condition condition, const authoring::TutoringScript& script);

// Applies one effect, enforcing the state invariants:
//   - nothing applies once the phase is no longer active (SessionClosed);
//   - an expectation is covered at most once and only while its question is
//     current (PreconditionError);
//   - in cts, the cursor advances only when the current question is fully
//     covered (CoverageIncomplete);
//   - completion requires the cursor past the last question, except in the
//     reading condition where it moves the cursor there.
SessionState apply(SessionState state, const Effect& e, const authoring::TutoringScript& script);

}  // namespace trialogue::orchestration
