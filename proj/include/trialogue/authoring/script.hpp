#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trialogue::authoring {

inline constexpr int kSchemaVersion = 1;

struct LessonText {
    std::string lesson_id;
    std::string title;
    std::string body;

    std::size_t word_count() const;
    void validate() const;

    // `.json` files hold {lesson_id, title, body}; anything else is read as
    // plain text with the file stem as id and title.
    static LessonText from_file(const std::filesystem::path& path);

    friend bool operator==(const LessonText&, const LessonText&) = default;
};

struct Expectation {
    std::string expectation_id;
    std::string question_id;
    std::string text;

    friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct Question {
    std::string question_id;
    std::string text;
    std::string solution_text;
    std::vector<Expectation> expectations;

    friend bool operator==(const Question&, const Question&) = default;
};

// Ordered questions with their expectations. Question order is the outer-loop
// order of a tutoring session.
struct TutoringScript {
    int schema_version = kSchemaVersion;
    std::string script_id;
    std::string lesson_id;
    std::vector<Question> questions;

    std::size_t expectation_count() const;
    const Question* find_question(std::string_view question_id) const;
    const Expectation* find_expectation(std::string_view expectation_id) const;

    friend bool operator==(const TutoringScript&, const TutoringScript&) = default;
};

struct Violation {
    std::string code;     // e.g. "duplicate_id", "no_expectations"
    std::string subject;  // id of the offending element, empty for script level
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ExpectationBounds {
    std::size_t min_per_question = 2;
    std::size_t max_per_question = 5;
};

// Type invariants only: at least one question, every question has
// expectations, ids unique, texts non-empty, back references consistent.
std::vector<Violation> check_structure(const TutoringScript& script);

// check_structure plus per-question expectation counts within bounds.
std::vector<Violation> validate_script(const TutoringScript& script, const ExpectationBounds& bounds);

// Canonical form: sorted keys, two-space indentation, trailing newline.
std::string serialize_script(const TutoringScript& script);
TutoringScript parse_script(std::string_view json_text);

TutoringScript load_script(const std::filesystem::path& path);
void save_script(const TutoringScript& script, const std::filesystem::path& path);

}  // namespace trialogue::authoring
