#include "trialogue/orchestration/engine.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "trialogue/errors.hpp"
#include "trialogue/llm/prompt.hpp"
#include "trialogue/text.hpp"

namespace trialogue::orchestration {

namespace {

constexpr std::string_view kFollowUp =
    "Ask one follow-up question that leads the learner to explain the following point in their own words, "
    "without stating it yourself: ";
constexpr std::string_view kEncourage =
    "The learner has now explained everything for the current question. Briefly reflect on what they taught "
    "you and thank them.";
constexpr std::string_view kAskNext =
    "Ask the learner to teach you the next question, quoting it: ";
constexpr std::string_view kClosing =
    "The learner has explained every question in the script. Thank them warmly and end the conversation.";
constexpr std::string_view kHelp =
    "The learner asked for help with the current question. Offer relevant information from the lesson that "
    "helps them continue, without writing the full answer for them.";
constexpr std::string_view kRevision =
    "The learner's last message contains incorrect information. Point out kindly what is wrong and ask them "
    "to revise their response. The problem: ";

// Accumulates effects while keeping the state they produce current, so each
// provider prompt sees the chat log as it stands at that moment.
class Builder {
public:
    Builder(SessionState state, const authoring::TutoringScript& script) : script_(script) {
        out_.state = std::move(state);
    }

    const SessionState& state() const { return out_.state; }

    void emit(Effect e) {
        out_.state = apply(std::move(out_.state), e, script_);
        out_.effects.push_back(std::move(e));
    }

    void say(DialogueAction action) {
        out_.actions.push_back(action);
        emit(effect::AgentSaid{std::move(action)});
    }

    Transition finish() && { return std::move(out_); }

private:
    const authoring::TutoringScript& script_;
    Transition out_;
};

std::string render_pending(const std::vector<authoring::Expectation>& pending) {
    std::string out;
    for (const auto& e : pending) out += "- " + e.expectation_id + ": " + e.text + "\n";
    return out;
}

llm::CompletionRequest request_for(std::vector<llm::ChatMessage> messages, const EngineOptions& options) {
    llm::CompletionRequest req;
    req.messages = std::move(messages);
    req.temperature = options.temperature;
    req.model_id = options.model_id;
    return req;
}

}  // namespace

std::string_view to_string(Rationale r) {
    switch (r) {
        case Rationale::help: return "help";
        case Rationale::misconception: return "misconception";
        case Rationale::coverage_progress: return "coverage_progress";
        case Rationale::coverage_complete: return "coverage_complete";
        case Rationale::session_complete: return "session_complete";
    }
    return "unknown";
}

std::optional<CoverageJudgment> parse_judgment(std::string_view reply, const std::vector<std::string>& pending_ids) {
    static const std::regex verdict_line(
        R"(^[\s\-*]*([A-Za-z0-9_.\-]+)\s*[:=]\s*(not[\s_\-]*covered|uncovered|covered)\b.*$)", std::regex::icase);
    static const std::regex misconception_line(R"(^[\s\-*]*misconception\s*[:=]\s*(yes|no)\b[\s\-:]*(.*)$)",
                                               std::regex::icase);

    std::map<std::string, bool> verdicts;
    std::optional<bool> misconception;
    std::string note;
    // Verdicts come one per line or separated by semicolons.
    std::vector<std::string> items;
    for (auto line : text::split_lines(reply)) {
        std::size_t start = 0;
        for (std::size_t p; (p = line.find(';', start)) != std::string_view::npos; start = p + 1)
            items.emplace_back(text::trim(line.substr(start, p - start)));
        items.emplace_back(text::trim(line.substr(start)));
    }
    for (const auto& l : items) {
        std::smatch m;
        if (std::regex_match(l, m, misconception_line)) {
            misconception = text::to_lower(m[1].str()) == "yes";
            note = std::string(text::trim(m[2].str()));
        } else if (std::regex_match(l, m, verdict_line)) {
            verdicts[m[1].str()] = text::to_lower(m[2].str()) == "covered";
        }
    }
    if (!misconception) return std::nullopt;
    CoverageJudgment j;
    for (const auto& id : pending_ids) {
        auto it = verdicts.find(id);
        if (it == verdicts.end()) return std::nullopt;
        if (it->second) j.covered_expectation_ids.push_back(id);
    }
    j.misconception_detected = *misconception;
    if (j.misconception_detected) j.misconception_note = note.empty() ? "the response contains incorrect information" : note;
    return j;
}

CoverageJudgment judge_coverage(std::string_view learner_message,
                                const std::vector<authoring::Expectation>& pending,
                                const authoring::Question& question, const authoring::LessonText& lesson,
                                const llm::TemplateSet& templates, llm::CompletionProvider& provider,
                                const EngineOptions& options) {
    if (pending.empty()) throw PreconditionError("judge_coverage needs at least one pending expectation");
    if (text::trim(learner_message).empty()) throw PreconditionError("learner message is empty");

    std::vector<std::string> ids;
    for (const auto& e : pending) ids.push_back(e.expectation_id);

    auto messages = llm::render_prompt(templates.get("judge"), {{"question", question.text},
                                                                {"solution", question.solution_text},
                                                                {"lesson", lesson.body},
                                                                {"pending_expectations", render_pending(pending)},
                                                                {"message", std::string(learner_message)}});
    auto first = provider.complete(request_for(messages, options));
    if (auto j = parse_judgment(first.content, ids)) return *j;

    if (!text::trim(first.content).empty()) messages.push_back({llm::Role::assistant, first.content});
    auto requirement = "Write exactly one line per expectation id (" + text::join(ids, ", ") +
                       ") in the form \"<id>: covered\" or \"<id>: not covered\", then one line "
                       "\"misconception: no\" or \"misconception: yes - <what is incorrect>\".";
    messages.push_back({llm::Role::user, llm::render_text(templates.get("reformat"), {{"requirement", requirement}})});
    auto second = provider.complete(request_for(std::move(messages), options));
    if (auto j = parse_judgment(second.content, ids)) return *j;

    CoverageJudgment degraded;
    degraded.degraded = true;
    degraded.degraded_reason = "judge reply could not be parsed after re-prompt";
    return degraded;
}

TurnDecision decide_turn(LearnerEvent event, const std::optional<CoverageJudgment>& judgment,
                         const SessionState& state, const authoring::TutoringScript& script) {
    if ((event == LearnerEvent::message) != judgment.has_value())
        throw PreconditionError("a judgment must accompany exactly the message events");
    if (event == LearnerEvent::help) return {Actor::riley, Rationale::help};
    if (judgment->misconception_detected) return {Actor::riley, Rationale::misconception};

    auto pending = state.pending_for_current(script);
    std::erase_if(pending, [&](const std::string& id) {
        return std::find(judgment->covered_expectation_ids.begin(), judgment->covered_expectation_ids.end(), id) !=
               judgment->covered_expectation_ids.end();
    });
    if (!pending.empty()) return {Actor::ruffle, Rationale::coverage_progress};
    const bool last = state.question_cursor + 1 >= script.questions.size();
    return {Actor::ruffle, last ? Rationale::session_complete : Rationale::coverage_complete};
}

Engine::Engine(authoring::TutoringScript script, authoring::LessonText lesson, llm::TemplateSet templates,
               EngineOptions options)
    : script_(std::move(script)), lesson_(std::move(lesson)), templates_(std::move(templates)),
      options_(std::move(options)) {}

void Engine::require_active(const SessionState& state) const {
    if (state.phase != Phase::active) throw SessionClosed("session " + state.session_id + " is closed");
}

Transition Engine::start_session(std::string session_id, Condition condition) const {
    if (auto violations = authoring::check_structure(script_); !violations.empty())
        throw InvalidScript("script " + script_.script_id + ": " + violations.front().message);
    if (script_.lesson_id != lesson_.lesson_id)
        throw InvalidScript("script " + script_.script_id + " belongs to lesson " + script_.lesson_id + ", not " +
                            lesson_.lesson_id);

    Builder b(initial_state(std::move(session_id), condition, script_), script_);
    const auto& first = script_.questions.front();
    if (condition == Condition::cts) {
        const auto opening = llm::render_text(templates_.get("ruffle_opening"), {{"question", first.text}});
        b.say({Actor::ruffle, ActionKind::ask_question, std::string(text::trim(opening)), first.question_id,
               std::nullopt});
    } else if (is_qa(condition)) {
        b.say({Actor::ruffle, ActionKind::ask_question, first.text, first.question_id, std::nullopt});
    }
    return std::move(b).finish();
}

std::string Engine::render_script_outline() const {
    std::string out;
    for (std::size_t i = 0; i < script_.questions.size(); ++i) {
        const auto& q = script_.questions[i];
        out += "Question " + std::to_string(i + 1) + " (" + q.question_id + "): " + q.text + "\n";
        for (const auto& e : q.expectations) out += "  Expectation " + e.expectation_id + ": " + e.text + "\n";
    }
    return out;
}

std::string Engine::render_chat_log(const SessionState& state) {
    std::string out;
    for (const auto& entry : state.chat_log) {
        switch (entry.actor) {
            case Actor::learner: out += "Learner: "; break;
            case Actor::ruffle: out += "Ruffle: "; break;
            case Actor::riley: out += "Riley: "; break;
        }
        out += entry.text + "\n";
    }
    return out;
}

std::string Engine::agent_text(Actor actor, ActionKind move, const std::string& instruction,
                               const SessionState& state, llm::CompletionProvider& provider) const {
    const auto cursor = std::min(state.question_cursor, script_.questions.size() - 1);
    const auto& question = script_.questions[cursor];
    std::vector<authoring::Expectation> pending;
    for (const auto& id : state.pending_for_current(script_)) pending.push_back(*script_.find_expectation(id));

    llm::Bindings bindings = {{"script", render_script_outline()},
                              {"lesson", lesson_.body},
                              {"move", std::string(to_string(move))},
                              {"question", question.text},
                              {"move_instruction", instruction},
                              {"pending_expectations", render_pending(pending)},
                              {"chat_log", render_chat_log(state)}};
    const auto& tmpl = templates_.get(actor == Actor::riley ? "riley" : "ruffle");
    auto reply = provider.complete(request_for(llm::render_prompt(tmpl, bindings), options_));
    auto body = text::trim(reply.content);
    if (body.empty())
        throw EmptyResponse(std::string(to_string(actor)) + " produced an empty " + std::string(to_string(move)));
    return std::string(body);
}

Transition Engine::handle_user_message(const SessionState& state, std::string_view text,
                                       llm::CompletionProvider& provider) const {
    require_active(state);
    if (state.condition != Condition::cts)
        throw ConditionMismatch("free-form messages are only accepted in cts sessions");
    if (text::trim(text).empty()) throw PreconditionError("learner message is empty");

    Builder b(state, script_);
    b.emit(effect::LearnerSaid{std::string(text)});

    const auto& question = script_.questions[state.question_cursor];
    std::vector<authoring::Expectation> pending;
    for (const auto& id : state.pending_for_current(script_)) pending.push_back(*script_.find_expectation(id));

    // A misconception can arrive together with the last missing expectation;
    // the revision that follows then has nothing left to judge.
    CoverageJudgment judgment;
    if (!pending.empty())
        judgment = judge_coverage(text, pending, question, lesson_, templates_, provider, options_);
    if (judgment.degraded) b.emit(effect::JudgmentDegraded{judgment.degraded_reason});

    const auto decision = decide_turn(LearnerEvent::message, judgment, state, script_);
    for (const auto& e : pending) {
        const auto& covered = judgment.covered_expectation_ids;
        if (std::find(covered.begin(), covered.end(), e.expectation_id) != covered.end())
            b.emit(effect::ExpectationCovered{e.expectation_id});
    }

    switch (decision.rationale) {
        case Rationale::misconception: {
            const auto note = judgment.misconception_note.value_or("incorrect information");
            b.emit(effect::RevisionRequested{note});
            auto reply = agent_text(Actor::riley, ActionKind::revision_request, std::string(kRevision) + note,
                                    b.state(), provider);
            b.say({Actor::riley, ActionKind::revision_request, std::move(reply), question.question_id, std::nullopt});
            break;
        }
        case Rationale::coverage_progress: {
            const auto target_id = b.state().pending_for_current(script_).front();
            const auto* target = script_.find_expectation(target_id);
            auto reply = agent_text(Actor::ruffle, ActionKind::follow_up, std::string(kFollowUp) + target->text,
                                    b.state(), provider);
            b.say({Actor::ruffle, ActionKind::follow_up, std::move(reply), question.question_id, target_id});
            break;
        }
        case Rationale::coverage_complete: {
            auto praise = agent_text(Actor::ruffle, ActionKind::encourage, std::string(kEncourage), b.state(), provider);
            b.say({Actor::ruffle, ActionKind::encourage, std::move(praise), question.question_id, std::nullopt});
            b.emit(effect::QuestionAdvanced{});
            const auto& next = script_.questions[b.state().question_cursor];
            auto ask = agent_text(Actor::ruffle, ActionKind::ask_question, std::string(kAskNext) + next.text,
                                  b.state(), provider);
            b.say({Actor::ruffle, ActionKind::ask_question, std::move(ask), next.question_id, std::nullopt});
            break;
        }
        case Rationale::session_complete: {
            auto bye = agent_text(Actor::ruffle, ActionKind::closing, std::string(kClosing), b.state(), provider);
            b.say({Actor::ruffle, ActionKind::closing, std::move(bye), question.question_id, std::nullopt});
            b.emit(effect::QuestionAdvanced{});
            b.emit(effect::SessionCompleted{});
            break;
        }
        case Rationale::help:
            break;
    }
    return std::move(b).finish();
}

Transition Engine::handle_help_request(const SessionState& state, llm::CompletionProvider& provider) const {
    require_active(state);
    if (state.condition != Condition::cts) throw ConditionMismatch("help is only available in cts sessions");
    Builder b(state, script_);
    b.emit(effect::HelpRequested{});
    auto reply = agent_text(Actor::riley, ActionKind::help_response, std::string(kHelp), b.state(), provider);
    b.say({Actor::riley, ActionKind::help_response, std::move(reply),
           script_.questions[state.question_cursor].question_id, std::nullopt});
    return std::move(b).finish();
}

Transition Engine::qa_answer(const SessionState& state, std::string_view answer,
                             llm::CompletionProvider* provider) const {
    require_active(state);
    if (!is_qa(state.condition)) throw ConditionMismatch("answers are only accepted in qa sessions");
    const auto& question = script_.questions[state.question_cursor];

    bool correct = false;
    if (!text::trim(answer).empty()) {
        std::optional<bool> verdict;
        if (provider != nullptr) {
            auto messages = llm::render_prompt(templates_.get("qa_judge"), {{"question", question.text},
                                                                            {"solution", question.solution_text},
                                                                            {"answer", std::string(answer)}});
            auto reply = text::to_lower(provider->complete(request_for(std::move(messages), options_)).content);
            for (auto line : text::split_lines(reply)) {
                auto t = text::trim(line);
                if (t.empty()) continue;
                if (t.find("incorrect") != std::string_view::npos) verdict = false;
                else if (t.find("correct") != std::string_view::npos) verdict = true;
                break;
            }
        }
        correct = verdict.value_or(text::keyword_overlap(answer, question.solution_text) >=
                                   options_.qa_overlap_threshold);
    }

    Builder b(state, script_);
    b.emit(effect::LearnerSaid{std::string(answer)});
    b.say({Actor::ruffle, ActionKind::qa_feedback,
           std::string(correct ? "Correct! " : "Not quite. ") + "Sample solution: " + question.solution_text,
           question.question_id, std::nullopt});
    b.emit(effect::QuestionAdvanced{});
    if (b.state().question_cursor >= script_.questions.size()) {
        b.emit(effect::SessionCompleted{});
    } else {
        const auto& next = script_.questions[b.state().question_cursor];
        b.say({Actor::ruffle, ActionKind::ask_question, next.text, next.question_id, std::nullopt});
    }
    return std::move(b).finish();
}

Transition Engine::finish_reading(const SessionState& state) const {
    require_active(state);
    if (state.condition != Condition::reading) throw ConditionMismatch("only reading sessions are finished by the learner");
    Builder b(state, script_);
    b.emit(effect::SessionCompleted{});
    return std::move(b).finish();
}

SessionState Engine::advance_question(const SessionState& state) const {
    require_active(state);
    auto next = apply(state, effect::QuestionAdvanced{}, script_);
    if (next.question_cursor >= script_.questions.size()) next = apply(std::move(next), effect::SessionCompleted{}, script_);
    return next;
}

SessionState Engine::apply_all(SessionState state, const std::vector<Effect>& effects) const {
    for (const auto& e : effects) state = apply(std::move(state), e, script_);
    return state;
}

}  // namespace trialogue::orchestration
