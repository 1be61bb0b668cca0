#include "trialogue/analytics/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

#include "trialogue/errors.hpp"

namespace trialogue::analytics {

namespace orch = trialogue::orchestration;
using nlohmann::json;

namespace {

struct FeatureColumn {
    const char* name;
    double (*get)(const ConversationFeatures&);
};

const FeatureColumn kFeatures[] = {
    {"n_user_messages", [](const ConversationFeatures& f) { return static_cast<double>(f.n_user_messages); }},
    {"n_help_requests", [](const ConversationFeatures& f) { return static_cast<double>(f.n_help_requests); }},
    {"n_revisions", [](const ConversationFeatures& f) { return static_cast<double>(f.n_revisions); }},
    {"n_words", [](const ConversationFeatures& f) { return static_cast<double>(f.n_words); }},
    {"n_scroll_events", [](const ConversationFeatures& f) { return static_cast<double>(f.n_scroll_events); }},
    {"learning_time_min", [](const ConversationFeatures& f) { return f.learning_time_min; }},
};

// Scrolling is a usage-pattern input, not one of the correlated features.
constexpr const char* kCorrelatedFeatures[] = {"n_user_messages", "n_help_requests", "n_revisions", "n_words",
                                               "learning_time_min"};

struct MeasureColumn {
    const char* name;
    std::optional<double> (*get)(const GainRecord&);
};

const MeasureColumn kMeasures[] = {
    {"post_test", [](const GainRecord& g) { return std::optional<double>(g.post); }},
    {"absolute_gain", [](const GainRecord& g) { return std::optional<double>(g.absolute); }},
    {"normalized_gain", [](const GainRecord& g) { return g.normalized; }},
};

const FeatureColumn& feature_column(std::string_view name) {
    for (const auto& c : kFeatures)
        if (name == c.name) return c;
    throw PreconditionError("unknown feature " + std::string(name));
}

std::optional<SummaryStat> maybe_summary(const std::vector<double>& v) {
    if (v.size() < 2) return std::nullopt;
    return summarize(v);
}

GroupSummary summarize_group(std::string name, const std::vector<const ParticipantRow*>& rows) {
    GroupSummary g;
    g.group = std::move(name);
    g.n = rows.size();
    std::vector<double> pre, post, abs, norm;
    for (const auto* r : rows) {
        pre.push_back(r->gains.pre);
        post.push_back(r->gains.post);
        abs.push_back(r->gains.absolute);
        if (r->gains.normalized) norm.push_back(*r->gains.normalized);
    }
    g.pre = maybe_summary(pre);
    g.post = maybe_summary(post);
    g.absolute = maybe_summary(abs);
    g.normalized = maybe_summary(norm);
    g.n_normalized = norm.size();

    for (const auto& col : kFeatures) {
        std::vector<double> v;
        for (const auto* r : rows)
            if (r->features) v.push_back(col.get(*r->features));
        if (auto s = maybe_summary(v)) g.features[col.name] = *s;
    }
    return g;
}

std::vector<ConversationFeatures> extract_all(const std::vector<std::vector<session::SessionEvent>>& logs,
                                              unsigned threads) {
    std::vector<ConversationFeatures> out(logs.size());
    std::vector<std::exception_ptr> errors(logs.size());
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < logs.size(); i += step) {
            try {
                out[i] = extract_features(logs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(logs.size())));
    if (n <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work, t, n);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

json summary_json(const std::optional<SummaryStat>& s) {
    if (!s) return nullptr;
    return {{"mean", s->mean}, {"standard_error", s->standard_error}, {"n", s->n}};
}

std::optional<SummaryStat> summary_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return SummaryStat{j.at("mean").get<double>(), j.at("standard_error").get<double>(), j.at("n").get<std::size_t>()};
}

json features_json(const ConversationFeatures& f) {
    return {{"n_user_messages", f.n_user_messages}, {"n_help_requests", f.n_help_requests},
            {"n_revisions", f.n_revisions},         {"n_words", f.n_words},
            {"n_scroll_events", f.n_scroll_events}, {"learning_time_min", f.learning_time_min}};
}

ConversationFeatures features_from_json(const json& j) {
    ConversationFeatures f;
    f.n_user_messages = j.at("n_user_messages").get<std::size_t>();
    f.n_help_requests = j.at("n_help_requests").get<std::size_t>();
    f.n_revisions = j.at("n_revisions").get<std::size_t>();
    f.n_words = j.at("n_words").get<std::size_t>();
    f.n_scroll_events = j.at("n_scroll_events").get<std::size_t>();
    f.learning_time_min = j.at("learning_time_min").get<double>();
    return f;
}

json group_json(const GroupSummary& g) {
    json features = json::object();
    for (const auto& [k, s] : g.features) features[k] = summary_json(s);
    return {{"group", g.group},
            {"n", g.n},
            {"pre", summary_json(g.pre)},
            {"post", summary_json(g.post)},
            {"absolute_gain", summary_json(g.absolute)},
            {"normalized_gain", summary_json(g.normalized)},
            {"n_normalized", g.n_normalized},
            {"features", features}};
}

GroupSummary group_from_json(const json& j) {
    GroupSummary g;
    g.group = j.at("group").get<std::string>();
    g.n = j.at("n").get<std::size_t>();
    g.pre = summary_from_json(j.at("pre"));
    g.post = summary_from_json(j.at("post"));
    g.absolute = summary_from_json(j.at("absolute_gain"));
    g.normalized = summary_from_json(j.at("normalized_gain"));
    g.n_normalized = j.at("n_normalized").get<std::size_t>();
    for (const auto& [k, v] : j.at("features").items()) g.features[k] = *summary_from_json(v);
    return g;
}

// Terminal columns: count code points, not bytes.
std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (widths.size() <= i) widths.push_back(0);
            widths[i] = std::max(widths[i], display_width(row[i]));
        }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t i = 0; i < rows[r].size(); ++i) {
            if (i > 0) line += "  ";
            line += rows[r][i];
            if (i + 1 < rows[r].size()) line.append(widths[i] - display_width(rows[r][i]), ' ');
        }
        out += line + "\n";
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : widths) total += w;
            out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
        }
    }
    return out;
}

std::string cell(const std::optional<SummaryStat>& s) { return s ? format_mean_se(*s) : "n/a"; }

std::string group_table(const char* title, const std::vector<GroupSummary>& groups) {
    std::vector<std::vector<std::string>> rows = {{title, "n", "Pre-test", "Post-test", "Abs. gain", "Norm. gain"}};
    for (const auto& g : groups)
        rows.push_back({g.group, std::to_string(g.n), cell(g.pre), cell(g.post), cell(g.absolute), cell(g.normalized)});
    return render_rows(rows);
}

}  // namespace

Report build_report(const std::vector<std::vector<session::SessionEvent>>& logs,
                    const std::vector<session::ParticipantRecord>& records, const ReportOptions& options) {
    Report rep;
    rep.thresholds = options.thresholds;
    rep.n_records = records.size();
    const auto included = filter_participants(records);
    rep.n_included = included.size();

    const auto features = extract_all(logs, options.threads);
    std::map<std::string, std::size_t> by_session;
    for (std::size_t i = 0; i < logs.size(); ++i)
        if (!logs[i].empty()) by_session.emplace(logs[i].front().session_id, i);

    for (const auto& r : included) {
        if (!r.pre_test_score || !r.post_test_score) continue;
        ParticipantRow row;
        row.participant_id = r.participant_id;
        row.session_id = r.session_id;
        row.condition = r.condition;
        row.gains = compute_gains(*r.pre_test_score, *r.post_test_score, r.max_score);
        if (auto it = by_session.find(r.session_id); it != by_session.end()) {
            row.features = features[it->second];
            if (r.condition == orch::Condition::cts && row.features->n_user_messages > 0)
                row.pattern = classify_pattern(*row.features, options.thresholds);
        }
        rep.participants.push_back(std::move(row));
    }
    if (rep.participants.empty()) throw EmptyCohort("no included participant has both test scores");

    for (auto c : {orch::Condition::reading, orch::Condition::qa_teacher, orch::Condition::qa_generated,
                   orch::Condition::cts}) {
        std::vector<const ParticipantRow*> rows;
        for (const auto& p : rep.participants)
            if (p.condition == c) rows.push_back(&p);
        if (!rows.empty()) rep.by_condition.push_back(summarize_group(std::string(orch::to_string(c)), rows));
    }
    for (auto pat : {UsagePattern::balanced, UsagePattern::read_conv, UsagePattern::conv_focused,
                     UsagePattern::help_focused}) {
        std::vector<const ParticipantRow*> rows;
        for (const auto& p : rep.participants)
            if (p.pattern == pat) rows.push_back(&p);
        if (!rows.empty()) rep.by_pattern.push_back(summarize_group(std::string(to_string(pat)), rows));
    }

    for (const char* fname : kCorrelatedFeatures) {
        const auto& fcol = feature_column(fname);
        for (const auto& m : kMeasures) {
            std::vector<double> x, y;
            for (const auto& p : rep.participants) {
                if (p.condition != orch::Condition::cts || !p.features) continue;
                auto v = m.get(p.gains);
                if (!v) continue;
                x.push_back(fcol.get(*p.features));
                y.push_back(*v);
            }
            CorrelationCell c{fname, m.name, std::nullopt, ""};
            try {
                c.result = pearson(x, y);
            } catch (const InsufficientData&) {
                c.note = "fewer than three participants";
            } catch (const ConstantInput&) {
                c.note = "constant input";
            }
            rep.correlations.push_back(std::move(c));
        }
    }
    return rep;
}

json to_json(const Report& rep) {
    json participants = json::array();
    for (const auto& p : rep.participants) {
        json gains = {{"pre", p.gains.pre},
                      {"post", p.gains.post},
                      {"max_score", p.gains.max_score},
                      {"absolute", p.gains.absolute},
                      {"normalized", p.gains.normalized ? json(*p.gains.normalized) : json(nullptr)}};
        participants.push_back({{"participant_id", p.participant_id},
                                {"session_id", p.session_id},
                                {"condition", orch::to_string(p.condition)},
                                {"features", p.features ? features_json(*p.features) : json(nullptr)},
                                {"pattern", p.pattern ? json(to_string(*p.pattern)) : json(nullptr)},
                                {"gains", gains}});
    }
    json by_condition = json::array(), by_pattern = json::array(), correlations = json::array();
    for (const auto& g : rep.by_condition) by_condition.push_back(group_json(g));
    for (const auto& g : rep.by_pattern) by_pattern.push_back(group_json(g));
    for (const auto& c : rep.correlations) {
        json jc = {{"feature", c.feature}, {"measure", c.measure}, {"note", c.note}};
        if (c.result) {
            jc["r"] = c.result->r;
            jc["p_two_sided"] = c.result->p;
            jc["n"] = c.result->n;
        } else {
            jc["r"] = nullptr;
            jc["p_two_sided"] = nullptr;
            jc["n"] = nullptr;
        }
        correlations.push_back(std::move(jc));
    }
    return {{"schema_version", rep.schema_version},
            {"thresholds", {{"help_ratio", rep.thresholds.help_ratio}, {"scroll_min", rep.thresholds.scroll_min}}},
            {"n_records", rep.n_records},
            {"n_included", rep.n_included},
            {"participants", participants},
            {"by_condition", by_condition},
            {"by_pattern", by_pattern},
            {"correlations", correlations}};
}

Report report_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version")) throw SchemaError("report has no schema_version");
    if (j["schema_version"] != Report::kSchemaVersion)
        throw VersionError("unsupported report schema_version " + j["schema_version"].dump());
    try {
        Report rep;
        rep.thresholds.help_ratio = j.at("thresholds").at("help_ratio").get<double>();
        rep.thresholds.scroll_min = j.at("thresholds").at("scroll_min").get<std::size_t>();
        rep.n_records = j.at("n_records").get<std::size_t>();
        rep.n_included = j.at("n_included").get<std::size_t>();
        for (const auto& jp : j.at("participants")) {
            ParticipantRow p;
            p.participant_id = jp.at("participant_id").get<std::string>();
            p.session_id = jp.at("session_id").get<std::string>();
            p.condition = orch::condition_from_string(jp.at("condition").get<std::string>());
            if (!jp.at("features").is_null()) p.features = features_from_json(jp["features"]);
            if (!jp.at("pattern").is_null()) p.pattern = usage_pattern_from_string(jp["pattern"].get<std::string>());
            const auto& g = jp.at("gains");
            p.gains = {g.at("pre").get<double>(), g.at("post").get<double>(), g.at("max_score").get<double>(),
                       g.at("absolute").get<double>(), std::nullopt};
            if (!g.at("normalized").is_null()) p.gains.normalized = g["normalized"].get<double>();
            rep.participants.push_back(std::move(p));
        }
        for (const auto& g : j.at("by_condition")) rep.by_condition.push_back(group_from_json(g));
        for (const auto& g : j.at("by_pattern")) rep.by_pattern.push_back(group_from_json(g));
        for (const auto& jc : j.at("correlations")) {
            CorrelationCell c{jc.at("feature").get<std::string>(), jc.at("measure").get<std::string>(), std::nullopt,
                              jc.at("note").get<std::string>()};
            if (!jc.at("r").is_null())
                c.result = CorrelationResult{jc["r"].get<double>(), jc.at("p_two_sided").get<double>(),
                                             jc.at("n").get<std::size_t>()};
            rep.correlations.push_back(std::move(c));
        }
        return rep;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed report: ") + e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(std::string("malformed report: ") + e.what());
    }
}

std::string render_table(const Report& rep) {
    std::string out = "Participants: " + std::to_string(rep.n_records) + " records, " +
                      std::to_string(rep.n_included) + " included, " + std::to_string(rep.participants.size()) +
                      " with both tests\n\n";
    out += group_table("Condition", rep.by_condition);
    if (!rep.by_pattern.empty()) {
        out += "\n" + group_table("Usage pattern", rep.by_pattern);
        std::vector<std::vector<std::string>> rows = {{"Usage pattern", "User messages", "Help requests", "Scrolls"}};
        for (const auto& g : rep.by_pattern) {
            auto f = [&](const char* k) {
                auto it = g.features.find(k);
                return it == g.features.end() ? std::string("n/a") : format_mean_se(it->second);
            };
            rows.push_back({g.group, f("n_user_messages"), f("n_help_requests"), f("n_scroll_events")});
        }
        out += "\n" + render_rows(rows);
    }

    std::vector<std::vector<std::string>> rows = {{"Feature (cts)", "Post-test", "Abs. gain", "Norm. gain"}};
    for (const char* fname : kCorrelatedFeatures) {
        std::vector<std::string> row = {fname};
        for (const auto& m : kMeasures) {
            auto it = std::find_if(rep.correlations.begin(), rep.correlations.end(),
                                   [&](const auto& c) { return c.feature == fname && c.measure == m.name; });
            if (it == rep.correlations.end() || !it->result) {
                row.emplace_back("n/a");
                continue;
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f (p=%.3f)", it->result->r, it->result->p);
            row.emplace_back(buf);
        }
        rows.push_back(std::move(row));
    }
    out += "\nPearson r, two-sided p\n" + render_rows(rows);
    return out;
}

}  // namespace trialogue::analytics
