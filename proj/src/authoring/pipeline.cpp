#include "trialogue/authoring/pipeline.hpp"

#include <optional>
#include <regex>
#include <type_traits>

#include "trialogue/errors.hpp"
#include "trialogue/llm/prompt.hpp"
#include "trialogue/text.hpp"

namespace trialogue::authoring {

namespace {

constexpr const char* kListFormat =
    " items as a numbered list: one item per line, each line starting with its number and a period (\"1. ...\").";

void require_placeholders(const llm::TemplateSet& templates, std::string_view name,
                          std::initializer_list<std::string_view> required) {
    if (!templates.contains(name)) throw PreconditionError("missing prompt template '" + std::string(name) + "'");
    auto present = llm::placeholders(templates.get(name));
    for (auto p : required)
        if (!present.contains(std::string(p)))
            throw PreconditionError("template '" + std::string(name) + "' lacks {" + std::string(p) + "}");
}

llm::CompletionRequest make_request(std::vector<llm::ChatMessage> messages, const AuthoringConfig& config) {
    llm::CompletionRequest req;
    req.messages = std::move(messages);
    req.temperature = config.temperature;
    req.model_id = config.model_id;
    return req;
}

// One attempt, then a single re-prompt carrying the stricter format
// instruction. `accept` returns the parsed value or nullopt.
template <typename Accept>
auto complete_with_reprompt(std::vector<llm::ChatMessage> messages, const std::string& requirement,
                            const AuthoringConfig& config, llm::CompletionProvider& provider,
                            Accept accept) -> std::remove_cvref_t<decltype(*accept(std::string{}))> {
    auto first = provider.complete(make_request(messages, config));
    if (auto parsed = accept(first.content)) return *parsed;

    if (!text::trim(first.content).empty())
        messages.push_back({llm::Role::assistant, first.content});
    messages.push_back({llm::Role::user,
                        llm::render_text(config.templates.get("reformat"), {{"requirement", requirement}})});
    auto second = provider.complete(make_request(std::move(messages), config));
    if (auto parsed = accept(second.content)) return *parsed;
    throw ParseError("reply could not be parsed after re-prompt: " + requirement);
}

}  // namespace

void AuthoringConfig::validate() const {
    if (target_question_count == 0) throw PreconditionError("target_question_count must be positive");
    if (bounds.min_per_question == 0) throw PreconditionError("min_expectations_per_question must be positive");
    if (bounds.min_per_question > bounds.max_per_question)
        throw PreconditionError("min_expectations_per_question exceeds max");
    require_placeholders(templates, "questions", {"lesson"});
    require_placeholders(templates, "solution", {"question", "lesson"});
    require_placeholders(templates, "expectations", {"question", "solution"});
    require_placeholders(templates, "reformat", {"requirement"});
}

std::vector<std::string> parse_enumerated_list(std::string_view reply) {
    static const std::regex numbered(R"(^\(?\d{1,3}[.):]\s+(.*)$)");
    static const std::regex bullet(R"(^(?:[-*+]|\xE2\x80\xA2)\s+(.*)$)");

    std::vector<std::string> lines;
    for (auto line : text::split_lines(reply)) {
        auto t = text::trim(line);
        if (!t.empty()) lines.emplace_back(t);
    }

    auto collect = [&](const std::regex& marker) {
        std::vector<std::string> items;
        bool any = false;
        for (const auto& line : lines) {
            std::smatch m;
            if (std::regex_match(line, m, marker)) {
                any = true;
                items.emplace_back(text::trim(m[1].str()));
            } else if (any) {
                items.back() += " " + line;
            }
        }
        return items;
    };

    if (auto items = collect(numbered); !items.empty()) return items;
    if (auto items = collect(bullet); !items.empty()) return items;
    return lines;
}

std::vector<std::string> generate_questions(const LessonText& lesson, const AuthoringConfig& config,
                                            llm::CompletionProvider& provider) {
    lesson.validate();
    config.validate();
    const auto count = config.target_question_count;
    auto messages = llm::render_prompt(config.templates.get("questions"),
                                       {{"lesson", lesson.body}, {"count", std::to_string(count)}});
    auto requirement = "Reply with exactly " + std::to_string(count) + kListFormat;
    return complete_with_reprompt(
        std::move(messages), requirement, config, provider,
        [&](const std::string& reply) -> std::optional<std::vector<std::string>> {
            auto items = parse_enumerated_list(reply);
            if (items.size() != count) return std::nullopt;
            return items;
        });
}

std::string generate_solution(std::string_view question_text, const LessonText& lesson,
                              const AuthoringConfig& config, llm::CompletionProvider& provider) {
    if (text::trim(question_text).empty()) throw PreconditionError("question text is empty");
    lesson.validate();
    auto messages = llm::render_prompt(config.templates.get("solution"),
                                       {{"question", std::string(question_text)}, {"lesson", lesson.body}});
    auto reply = provider.complete(make_request(std::move(messages), config));
    auto solution = text::trim(reply.content);
    if (solution.empty()) throw EmptyResponse("provider returned an empty solution");
    return std::string(solution);
}

std::vector<std::string> generate_expectations(std::string_view question_text, std::string_view solution_text,
                                               const AuthoringConfig& config, llm::CompletionProvider& provider) {
    if (text::trim(question_text).empty()) throw PreconditionError("question text is empty");
    if (text::trim(solution_text).empty()) throw PreconditionError("solution text is empty");
    const auto lo = config.bounds.min_per_question;
    const auto hi = config.bounds.max_per_question;
    auto messages = llm::render_prompt(config.templates.get("expectations"),
                                       {{"question", std::string(question_text)},
                                        {"solution", std::string(solution_text)},
                                        {"min", std::to_string(lo)},
                                        {"max", std::to_string(hi)}});
    auto requirement =
        "Reply with between " + std::to_string(lo) + " and " + std::to_string(hi) + kListFormat;
    return complete_with_reprompt(
        std::move(messages), requirement, config, provider,
        [&](const std::string& reply) -> std::optional<std::vector<std::string>> {
            auto items = parse_enumerated_list(reply);
            if (items.size() < lo || items.size() > hi) return std::nullopt;
            return items;
        });
}

TutoringScript compile_script(const LessonText& lesson, const std::vector<QuestionDraft>& questions,
                              const std::vector<std::vector<std::string>>& expectations_per_question) {
    if (questions.empty()) throw EmptyScript("cannot compile a script without questions");
    if (questions.size() != expectations_per_question.size())
        throw PreconditionError("questions and expectation lists differ in length");

    TutoringScript script;
    script.lesson_id = lesson.lesson_id;
    script.script_id = lesson.lesson_id + "-script";
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& draft = questions[i];
        if (text::trim(draft.text).empty() || text::trim(draft.solution_text).empty())
            throw PreconditionError("question " + std::to_string(i + 1) + " has empty text or solution");
        if (expectations_per_question[i].empty())
            throw MissingExpectations("question " + std::to_string(i + 1) + " has no expectations");

        Question q;
        q.question_id = "q" + std::to_string(i + 1);
        q.text = draft.text;
        q.solution_text = draft.solution_text;
        for (std::size_t j = 0; j < expectations_per_question[i].size(); ++j) {
            const auto& e = expectations_per_question[i][j];
            if (text::trim(e).empty())
                throw PreconditionError("question " + std::to_string(i + 1) + " has an empty expectation");
            q.expectations.push_back({q.question_id + "e" + std::to_string(j + 1), q.question_id, e});
        }
        script.questions.push_back(std::move(q));
    }
    return script;
}

TutoringScript author_script(const LessonText& lesson, const AuthoringConfig& config,
                             llm::CompletionProvider& provider) {
    auto question_texts = generate_questions(lesson, config, provider);
    std::vector<QuestionDraft> drafts;
    std::vector<std::vector<std::string>> expectations;
    for (const auto& q : question_texts) {
        auto solution = generate_solution(q, lesson, config, provider);
        expectations.push_back(generate_expectations(q, solution, config, provider));
        drafts.push_back({q, std::move(solution)});
    }
    return compile_script(lesson, drafts, expectations);
}

}  // namespace trialogue::authoring
