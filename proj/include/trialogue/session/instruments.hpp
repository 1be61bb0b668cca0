#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialogue/orchestration/state.hpp"

namespace trialogue::session {

enum class ItemKind { multiple_choice, fill_blank, free_form };

struct TestItem {
    std::string item_id;
    ItemKind kind = ItemKind::multiple_choice;
    std::string prompt;
    std::vector<std::string> options;       // multiple_choice only
    std::optional<std::size_t> key_index;   // multiple_choice only
    std::vector<std::string> accepted;      // fill_blank only
};

// Every item is worth exactly one point.
struct TestInstrument {
    std::string instrument_id;
    std::vector<TestItem> items;

    double max_score() const { return static_cast<double>(items.size()); }
    const TestItem* find(const std::string& item_id) const;
    void validate() const;

    static TestInstrument from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct TestScore {
    double auto_score = 0.0;
    std::vector<std::string> pending_manual;
    std::map<std::string, double> item_points;
};

// Multiple choice: the response is the option index. Fill-in-the-blank:
// case-insensitive, whitespace-trimmed membership in the accepted strings.
// Free-form items are always returned for manual scoring. Unanswered items
// earn nothing; a response to an item the instrument lacks is UnknownItem.
TestScore score_test(const TestInstrument& instrument, const nlohmann::json& responses);

struct SurveyItem {
    std::string item_id;
    std::string prompt;
    std::string construct;                 // engagement, understanding, ...
    std::optional<int> attention_expected; // set for attention checks
    bool lookup = false;                   // "I looked up answers" item
};

struct SurveyInstrument {
    static constexpr int kScaleMin = 1;
    static constexpr int kScaleMax = 7;

    std::string instrument_id;
    std::vector<SurveyItem> items;

    void validate() const;
    static SurveyInstrument from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SurveyOutcome {
    std::map<std::string, int> responses;
    bool attention_pass = false;
    // True only when the lookup item was answered "strongly disagree" (1).
    bool lookup_denied = false;
};

SurveyOutcome evaluate_survey(const SurveyInstrument& survey, const nlohmann::json& responses);

struct ParticipantRecord {
    std::string participant_id;
    std::string session_id;
    orchestration::Condition condition = orchestration::Condition::reading;
    std::optional<double> pre_test_score;
    std::optional<double> post_test_score;
    double max_score = 6.0;
    std::map<std::string, int> survey;
    bool attention_pass = false;
    bool lookup_denied = false;

    nlohmann::json to_json() const;
    static ParticipantRecord from_json(const nlohmann::json& j);
};

std::vector<ParticipantRecord> load_records(const std::filesystem::path& path);
void save_records(const std::vector<ParticipantRecord>& records, const std::filesystem::path& path);

}  // namespace trialogue::session
