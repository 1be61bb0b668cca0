#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialogue/analytics/features.hpp"
#include "trialogue/analytics/stats.hpp"
#include "trialogue/session/event.hpp"
#include "trialogue/session/instruments.hpp"

namespace trialogue::analytics {

struct ReportOptions {
    PatternThresholds thresholds;
    // Worker threads for per-log feature extraction. The output does not
    // depend on this value.
    unsigned threads = 1;
};

struct ParticipantRow {
    std::string participant_id;
    std::string session_id;
    orchestration::Condition condition = orchestration::Condition::reading;
    std::optional<ConversationFeatures> features;  // absent without a log
    std::optional<UsagePattern> pattern;           // cts sessions with messages only
    GainRecord gains;
};

struct GroupSummary {
    std::string group;
    std::size_t n = 0;
    // Each summary needs two participants; absent otherwise.
    std::optional<SummaryStat> pre, post, absolute, normalized;
    // Mean of per-participant normalized gains over those where it is defined.
    std::size_t n_normalized = 0;
    std::map<std::string, SummaryStat> features;
};

struct CorrelationCell {
    std::string feature;
    std::string measure;
    std::optional<CorrelationResult> result;
    std::string note;  // why result is absent
};

struct Report {
    static constexpr int kSchemaVersion = 1;
    int schema_version = kSchemaVersion;
    PatternThresholds thresholds;
    std::size_t n_records = 0;
    std::size_t n_included = 0;  // after attention and lookup filtering
    std::vector<ParticipantRow> participants;
    std::vector<GroupSummary> by_condition;
    std::vector<GroupSummary> by_pattern;
    // Feature-vs-performance correlations over cts participants; p is two-sided.
    std::vector<CorrelationCell> correlations;
};

// Filters the records, joins them to their logs by session id, computes
// gains, features and usage patterns, then the group summaries and the
// correlation matrix. Records lacking a pre or post score are dropped.
// Throws EmptyCohort when nothing is left and CorruptLog for a broken log.
Report build_report(const std::vector<std::vector<session::SessionEvent>>& logs,
                    const std::vector<session::ParticipantRecord>& records, const ReportOptions& options = {});

nlohmann::json to_json(const Report& report);
// Throws SchemaError or VersionError.
Report report_from_json(const nlohmann::json& j);

// Aligned plain-text tables, values as "mean ± SE".
std::string render_table(const Report& report);

}  // namespace trialogue::analytics
