#include "trialogue/orchestration/state.hpp"

#include "trialogue/errors.hpp"

namespace trialogue::orchestration {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N], std::string_view what) {
    for (const auto& [value, name] : table)
        if (name == s) return value;
    throw PreconditionError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::pair<Enum, std::string_view> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (value == v) return name;
    return "unknown";
}

constexpr std::pair<Condition, std::string_view> kConditions[] = {
    {Condition::reading, "reading"},
    {Condition::qa_teacher, "qa_teacher"},
    {Condition::qa_generated, "qa_generated"},
    {Condition::cts, "cts"}};
constexpr std::pair<Phase, std::string_view> kPhases[] = {
    {Phase::active, "active"}, {Phase::completed, "completed"}, {Phase::abandoned, "abandoned"}};
constexpr std::pair<Actor, std::string_view> kActors[] = {
    {Actor::learner, "learner"}, {Actor::ruffle, "ruffle"}, {Actor::riley, "riley"}};
constexpr std::pair<ActionKind, std::string_view> kKinds[] = {
    {ActionKind::ask_question, "ask_question"},
    {ActionKind::follow_up, "follow_up"},
    {ActionKind::encourage, "encourage"},
    {ActionKind::help_response, "help_response"},
    {ActionKind::revision_request, "revision_request"},
    {ActionKind::qa_feedback, "qa_feedback"},
    {ActionKind::closing, "closing"}};

}  // namespace

std::string_view to_string(Condition c) { return name_of(c, kConditions); }
std::string_view to_string(Phase p) { return name_of(p, kPhases); }
std::string_view to_string(Actor a) { return name_of(a, kActors); }
std::string_view to_string(ActionKind k) { return name_of(k, kKinds); }
Condition condition_from_string(std::string_view s) { return parse_enum(s, kConditions, "condition"); }
Actor actor_from_string(std::string_view s) { return parse_enum(s, kActors, "actor"); }
ActionKind action_kind_from_string(std::string_view s) { return parse_enum(s, kKinds, "action kind"); }

bool valid_pairing(Actor actor, ActionKind kind) {
    switch (kind) {
        case ActionKind::ask_question:
        case ActionKind::follow_up:
        case ActionKind::encourage:
        case ActionKind::qa_feedback:
        case ActionKind::closing:
            return actor == Actor::ruffle;
        case ActionKind::help_response:
        case ActionKind::revision_request:
            return actor == Actor::riley;
    }
    return false;
}

std::vector<std::string> SessionState::pending_for_current(const authoring::TutoringScript& script) const {
    std::vector<std::string> out;
    if (question_cursor >= script.questions.size()) return out;
    for (const auto& e : script.questions[question_cursor].expectations) {
        auto it = coverage.find(e.expectation_id);
        if (it != coverage.end() && it->second == Coverage::pending) out.push_back(e.expectation_id);
    }
    return out;
}

std::size_t SessionState::covered_count() const {
    std::size_t n = 0;
    for (const auto& [_, c] : coverage) n += c == Coverage::covered ? 1 : 0;
    return n;
}

SessionState initial_state(std::string session_id, Condition condition, const authoring::TutoringScript& script) {
    SessionState s;
    s.session_id = std::move(session_id);
    s.condition = condition;
    s.script_id = script.script_id;
    if (condition == Condition::cts)
        for (const auto& q : script.questions)
            for (const auto& e : q.expectations) s.coverage.emplace(e.expectation_id, Coverage::pending);
    return s;
}

namespace {

struct Applier {
    SessionState& s;
    const authoring::TutoringScript& script;

    void operator()(const effect::LearnerSaid& e) { s.chat_log.push_back({Actor::learner, e.text}); }

    void operator()(const effect::AgentSaid& e) {
        if (!valid_pairing(e.action.actor, e.action.kind))
            throw PreconditionError(std::string(to_string(e.action.actor)) + " cannot emit " +
                                    std::string(to_string(e.action.kind)));
        s.chat_log.push_back({e.action.actor, e.action.text});
    }

    void operator()(const effect::ExpectationCovered& e) {
        if (s.condition != Condition::cts) throw ConditionMismatch("coverage is tracked only in cts sessions");
        auto it = s.coverage.find(e.expectation_id);
        if (it == s.coverage.end()) throw PreconditionError("unknown expectation " + e.expectation_id);
        if (it->second == Coverage::covered) throw PreconditionError("expectation already covered: " + e.expectation_id);
        const auto* exp = script.find_expectation(e.expectation_id);
        if (exp == nullptr || s.question_cursor >= script.questions.size() ||
            exp->question_id != script.questions[s.question_cursor].question_id)
            throw PreconditionError("expectation " + e.expectation_id + " is not part of the current question");
        it->second = Coverage::covered;
    }

    void operator()(const effect::HelpRequested&) {
        if (s.condition != Condition::cts) throw ConditionMismatch("help is only available in cts sessions");
        ++s.help_count;
    }

    void operator()(const effect::RevisionRequested&) {
        if (s.condition != Condition::cts) throw ConditionMismatch("revisions only happen in cts sessions");
        ++s.revision_count;
    }

    void operator()(const effect::QuestionAdvanced&) {
        if (s.condition == Condition::reading) throw ConditionMismatch("reading sessions have no questions");
        if (s.question_cursor >= script.questions.size()) throw PreconditionError("already past the last question");
        if (s.condition == Condition::cts && !s.pending_for_current(script).empty())
            throw CoverageIncomplete("question " + script.questions[s.question_cursor].question_id +
                                     " still has pending expectations");
        ++s.question_cursor;
    }

    void operator()(const effect::SessionCompleted&) {
        if (s.condition == Condition::reading) {
            s.question_cursor = script.questions.size();
        } else if (s.question_cursor < script.questions.size()) {
            throw PreconditionError("session cannot complete before the last question");
        }
        s.phase = Phase::completed;
    }

    void operator()(const effect::JudgmentDegraded&) {}
};

}  // namespace

SessionState apply(SessionState state, const Effect& e, const authoring::TutoringScript& script) {
    if (state.phase != Phase::active) throw SessionClosed("session " + state.session_id + " is not active");
    std::visit(Applier{state, script}, e);
    return state;
}

}  // namespace trialogue::orchestration
