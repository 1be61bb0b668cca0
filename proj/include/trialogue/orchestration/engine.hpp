#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialogue/authoring/script.hpp"
#include "trialogue/llm/completion.hpp"
#include "trialogue/llm/templates.hpp"
#include "trialogue/orchestration/state.hpp"

namespace trialogue::orchestration {

struct CoverageJudgment {
    std::vector<std::string> covered_expectation_ids;
    bool misconception_detected = false;
    std::optional<std::string> misconception_note;
    // Set when the judge reply could not be parsed even after a re-prompt;
    // the judgment is then empty so the conversation can continue.
    bool degraded = false;
    std::string degraded_reason;
};

enum class Rationale { help, misconception, coverage_progress, coverage_complete, session_complete };
std::string_view to_string(Rationale r);

struct TurnDecision {
    Actor responder = Actor::ruffle;
    Rationale rationale = Rationale::coverage_progress;

    friend bool operator==(const TurnDecision&, const TurnDecision&) = default;
};

enum class LearnerEvent { message, help };

struct Transition {
    SessionState state;
    std::vector<DialogueAction> actions;
    std::vector<Effect> effects;
};

struct EngineOptions {
    double temperature = 0.7;
    std::string model_id;
    // Keyword overlap at or above which a QA answer counts as correct when
    // no provider is used.
    double qa_overlap_threshold = 0.5;
};

// Parses a judge reply. Returns nullopt unless every pending id has its own
// covered / not-covered line and a misconception line is present; a reply
// that only judges the answer as a whole is therefore rejected.
std::optional<CoverageJudgment> parse_judgment(std::string_view reply, const std::vector<std::string>& pending_ids);

CoverageJudgment judge_coverage(std::string_view learner_message,
                                const std::vector<authoring::Expectation>& pending,
                                const authoring::Question& question, const authoring::LessonText& lesson,
                                const llm::TemplateSet& templates, llm::CompletionProvider& provider,
                                const EngineOptions& options = {});

// help -> riley; misconception -> riley; otherwise ruffle, reporting whether
// the judgment finishes the current question (or the whole script).
TurnDecision decide_turn(LearnerEvent event, const std::optional<CoverageJudgment>& judgment,
                         const SessionState& state, const authoring::TutoringScript& script);

// Pure transition functions over SessionState for one script and lesson.
// Provider calls are the only side effect; every state change is returned as
// an effect list alongside the new state.
class Engine {
public:
    Engine(authoring::TutoringScript script, authoring::LessonText lesson,
           llm::TemplateSet templates = llm::TemplateSet::defaults(), EngineOptions options = {});

    const authoring::TutoringScript& script() const { return script_; }
    const authoring::LessonText& lesson() const { return lesson_; }

    Transition start_session(std::string session_id, Condition condition) const;

    Transition handle_user_message(const SessionState& state, std::string_view text,
                                   llm::CompletionProvider& provider) const;
    Transition handle_help_request(const SessionState& state, llm::CompletionProvider& provider) const;

    // `provider` may be null, in which case correctness is decided by keyword
    // overlap with the sample solution.
    Transition qa_answer(const SessionState& state, std::string_view answer,
                         llm::CompletionProvider* provider) const;

    // Reading sessions end when the learner says so.
    Transition finish_reading(const SessionState& state) const;

    SessionState advance_question(const SessionState& state) const;

    // Folds effects onto a state with the same rules the transitions use.
    SessionState apply_all(SessionState state, const std::vector<Effect>& effects) const;

    std::string render_script_outline() const;
    static std::string render_chat_log(const SessionState& state);

private:
    std::string agent_text(Actor actor, ActionKind move, const std::string& instruction,
                           const SessionState& state, llm::CompletionProvider& provider) const;
    void require_active(const SessionState& state) const;

    authoring::TutoringScript script_;
    authoring::LessonText lesson_;
    llm::TemplateSet templates_;
    EngineOptions options_;
};

}  // namespace trialogue::orchestration
