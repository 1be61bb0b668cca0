#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trialogue/authoring/script.hpp"
#include "trialogue/llm/completion.hpp"
#include "trialogue/llm/templates.hpp"

namespace trialogue::authoring {

struct AuthoringConfig {
    std::size_t target_question_count = 4;
    ExpectationBounds bounds;
    // Must provide "questions" ({lesson}), "solution" ({question}, {lesson}),
    // "expectations" ({question}, {solution}) and "reformat" ({requirement}).
    llm::TemplateSet templates = llm::TemplateSet::defaults();
    double temperature = 0.7;
    std::string model_id;

    // Throws PreconditionError on bad bounds or templates lacking a
    // required placeholder.
    void validate() const;
};

// Splits an LLM reply into list items. Numbered lines ("1. ", "2) ") win
// over bullets ("- ", "* "), which win over plain non-empty lines; markers
// are stripped and unmarked lines following a marked item are folded into it.
std::vector<std::string> parse_enumerated_list(std::string_view reply);

// Step (i): exactly config.target_question_count question texts.
std::vector<std::string> generate_questions(const LessonText& lesson, const AuthoringConfig& config,
                                            llm::CompletionProvider& provider);

// Step (ii): a non-empty model answer.
std::string generate_solution(std::string_view question_text, const LessonText& lesson,
                              const AuthoringConfig& config, llm::CompletionProvider& provider);

// Step (iii): between bounds.min_per_question and bounds.max_per_question items.
std::vector<std::string> generate_expectations(std::string_view question_text, std::string_view solution_text,
                                               const AuthoringConfig& config, llm::CompletionProvider& provider);

struct QuestionDraft {
    std::string text;
    std::string solution_text;
};

// Step (iv): assigns q<N> / q<N>e<M> ids in input order. The script id is
// "<lesson_id>-script".
TutoringScript compile_script(const LessonText& lesson, const std::vector<QuestionDraft>& questions,
                              const std::vector<std::vector<std::string>>& expectations_per_question);

// Runs all four steps in order.
TutoringScript author_script(const LessonText& lesson, const AuthoringConfig& config,
                             llm::CompletionProvider& provider);

}  // namespace trialogue::authoring
