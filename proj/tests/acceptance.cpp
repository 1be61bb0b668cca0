// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "testkit.hpp"
#include "trialogue/analytics/features.hpp"
#include "trialogue/analytics/stats.hpp"
#include "trialogue/authoring/script.hpp"
#include "trialogue/errors.hpp"
#include "trialogue/session/event_store.hpp"
#include "trialogue/session/replay.hpp"
#include "trialogue/session/service.hpp"

using namespace trialogue;
namespace orch = trialogue::orchestration;
using Clock = std::chrono::steady_clock;

namespace {

// Collects the first failed check of a criterion.
struct Check {
    std::string failure;
    bool ok() const { return failure.empty(); }
    void expect(bool cond, const std::string& what) {
        if (!cond && failure.empty()) failure = what;
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::fabs(got - want) <= tol)) {
            std::ostringstream os;
            os.precision(17);
            os << what << ": got " << got << ", want " << want << " +/- " << tol;
            expect(false, os.str());
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void run(const char* name, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = Clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (!c.ok()) ++failures;
    std::printf("%s  %-28s (%.2fs)%s%s\n", c.ok() ? "PASS" : "FAIL", name, s, c.ok() ? "" : "  ",
                c.failure.c_str());
    std::fflush(stdout);
}

void scripted_end_to_end(Check& c) {
    const auto t0 = Clock::now();
    testkit::TempDir dir;
    auto provider = std::make_shared<llm::ScriptedProvider>();
    session::SessionService service(dir.path(), provider);
    testkit::seed_service(service);
    const auto script = testkit::load_fixture_script("cells_script.json");
    c.expect(script.questions.size() == 4 && script.expectation_count() == 12, "fixture is not 4 x 12");

    std::mt19937_64 rng(5);
    const auto id = testkit::simulate_service(service, provider, script, rng);
    const auto live = service.get(id);
    c.expect(live.state.phase == orch::Phase::completed, "session did not complete");
    c.expect(live.state.covered_count() == 12, "not all 12 expectations covered");
    for (std::size_t i = 0; i < live.events.size(); ++i)
        c.expect(live.events[i].seq == i + 1, "log has a gap at index " + std::to_string(i));

    // Replay from a fresh store so nothing cached in the service is reused.
    session::EventStore store(dir.path() / "sessions");
    c.expect(session::replay_log(store.load(id)).state == live.state, "replayed state differs from live state");
    c.expect(seconds_since(t0) < 5.0, "runtime exceeds 5 s");
}

void gain_arithmetic(Check& c) {
    auto conv = analytics::compute_gains(0.62, 4.12, 6);
    c.expect(conv.absolute == 3.5, "conv focused absolute gain is not exactly 3.50");
    c.expect(conv.normalized.has_value(), "conv focused normalized gain undefined");
    c.near(conv.normalized.value_or(NAN), 0.65, 0.005, "conv focused normalized gain");
    auto help = analytics::compute_gains(0.67, 2.17, 6);
    c.expect(help.absolute == 1.5, "help focused absolute gain is not exactly 1.50");
    c.expect(help.normalized.has_value(), "help focused normalized gain undefined");
    c.near(help.normalized.value_or(NAN), 0.28, 0.005, "help focused normalized gain");
}

void correlation_oracle(Check& c) {
    const auto t0 = Clock::now();
    const std::vector<double> x{1, 2, 3}, y{2, 1, 3};
    auto res = analytics::pearson(x, y);
    c.near(res.r, 0.5, 1e-12, "r");
    // df = 1 is the Cauchy distribution: two-sided p = 1 - (2/pi) atan(|t|).
    const double t = 0.5 * std::sqrt(1.0 / (1.0 - 0.25));
    const double p_closed = 1.0 - 2.0 / M_PI * std::atan(t);
    c.near(p_closed, 0.6667, 1e-4, "closed-form p");
    c.near(res.p, 0.6667, 1e-4, "p");

    std::mt19937_64 rng(17);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-10.0, 10.0);
    std::uniform_int_distribution<std::size_t> len(3, 200);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = len(rng);
        std::vector<double> a(n), b(n);
        const double w = z(rng);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = z(rng);
            b[i] = w * a[i] + z(rng);
        }
        const double r = analytics::pearson(a, b).r;
        const double k = scale(rng) * (trial % 2 ? 1.0 : -1.0), s = shift(rng);
        std::vector<double> ax(n), by(n);
        for (std::size_t i = 0; i < n; ++i) {
            ax[i] = k * a[i] + s;
            by[i] = k * b[i] + s;
        }
        const double sign = k > 0 ? 1.0 : -1.0;
        c.near(analytics::pearson(ax, b).r, sign * r, 1e-12, "affine x, trial " + std::to_string(trial));
        c.near(analytics::pearson(a, by).r, sign * r, 1e-12, "affine y, trial " + std::to_string(trial));
    }

    // Monte Carlo: T = Z / sqrt(V / df), V ~ chi-square(df).
    constexpr int kSamples = 1'000'000;
    for (double df : {1.0, 5.0, 30.0}) {
        std::chi_squared_distribution<double> chi(df);
        const std::vector<double> points{-3.0, -1.0, -0.25, 0.0, 0.5, 1.5, 4.0};
        std::vector<long> below(points.size(), 0);
        for (int i = 0; i < kSamples; ++i) {
            const double tv = z(rng) / std::sqrt(chi(rng) / df);
            for (std::size_t k = 0; k < points.size(); ++k) below[k] += tv <= points[k];
        }
        for (std::size_t k = 0; k < points.size(); ++k) {
            const double cdf = analytics::student_t_cdf(points[k], df);
            const double se = std::sqrt(cdf * (1.0 - cdf) / kSamples);
            std::ostringstream what;
            what << "t cdf df=" << df << " t=" << points[k];
            c.near(static_cast<double>(below[k]) / kSamples, cdf, 3.0 * se, what.str());
        }
    }
    c.expect(seconds_since(t0) < 10.0, "runtime exceeds 10 s");
}

void summary_oracle(Check& c) {
    const std::vector<double> v{1, 2, 3};
    auto s = analytics::summarize(v);
    c.near(s.mean, 2.0, 1e-12, "mean");
    c.near(s.standard_error, 1.0 / std::sqrt(3.0), 1e-9, "standard error");
}

void classifier_totality(Check& c) {
    using analytics::UsagePattern;
    auto feat = [](std::size_t msgs, std::size_t help, std::size_t scroll) {
        analytics::ConversationFeatures f;
        f.n_user_messages = msgs;
        f.n_help_requests = help;
        f.n_scroll_events = scroll;
        return f;
    };
    c.expect(analytics::classify_pattern(feat(8, 5, 10)) == UsagePattern::help_focused, "help=5 msgs=8 scroll=10");
    c.expect(analytics::classify_pattern(feat(15, 0, 12)) == UsagePattern::read_conv, "help=0 msgs=15 scroll=12");
    c.expect(analytics::classify_pattern(feat(20, 2, 9)) == UsagePattern::balanced, "help=2 msgs=20 scroll=9");

    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> msgs(1, 200), count(0, 200);
    for (int i = 0; i < 10000; ++i) {
        auto f = feat(msgs(rng), count(rng), count(rng));
        f.n_revisions = count(rng);
        f.n_words = f.n_user_messages * count(rng);
        f.learning_time_min = static_cast<double>(count(rng)) / 3.0;
        const auto p = analytics::classify_pattern(f);
        c.expect(p == UsagePattern::balanced || p == UsagePattern::read_conv || p == UsagePattern::conv_focused ||
                     p == UsagePattern::help_focused,
                 "label outside the four patterns");
        c.expect(analytics::classify_pattern(f) == p, "classification is not deterministic");
    }
}

void script_round_trip(Check& c) {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 1000; ++i) {
        const auto script = testkit::random_script(rng);
        const auto first = authoring::serialize_script(script);
        const auto second = authoring::serialize_script(authoring::parse_script(first));
        c.expect(first == second, "serializations differ at trial " + std::to_string(i));
    }
    const auto fixture = testkit::load_fixture_script("form_function_script.json");
    const auto report = authoring::validate_script(fixture, {});
    c.expect(report.empty(), report.empty() ? "" : "fixture validation: " + report.front().message);
}

void no_skip(Check& c) {
    std::mt19937_64 rng(31);
    auto lesson = testkit::load_fixture_lesson();
    for (int run = 0; run < 200; ++run) {
        const bool fixture = run % 4 == 0;
        auto script = fixture ? testkit::load_fixture_script("cells_script.json") : testkit::random_script(rng);
        lesson.lesson_id = script.lesson_id;
        const orch::Engine engine(script, lesson);
        testkit::LearnerPolicy policy;
        policy.p_help = 0.2;
        policy.p_misconception = 0.2;
        const auto sim = testkit::simulate_engine(engine, script, rng, policy);
        c.expect(sim.state.phase == orch::Phase::completed, "run " + std::to_string(run) + " did not complete");
        auto prev = engine.start_session("s", orch::Condition::cts).state;
        for (const auto& st : sim.trajectory) {
            for (const auto& [id, cov] : prev.coverage)
                if (cov == orch::Coverage::covered)
                    c.expect(st.coverage.at(id) == orch::Coverage::covered, "coverage regressed for " + id);
            if (st.phase == orch::Phase::completed)
                for (const auto& [id, cov] : st.coverage)
                    c.expect(cov == orch::Coverage::covered, "completed with " + id + " pending");
            prev = st;
        }
    }
}

void condition_isolation(Check& c) {
    testkit::TempDir dir;
    auto provider = std::make_shared<llm::ScriptedProvider>();
    session::ServiceOptions options;
    options.provider_judges_qa = false;
    session::SessionService service(dir.path(), provider, options);
    testkit::seed_service(service);
    const auto script = testkit::load_fixture_script("cells_script.json");

    using session::EventType;
    auto reading = service.create_session(orch::Condition::reading, "cells-script", "cells", "r").session_id;
    service.append_event(reading, {EventType::lesson_scrolled, {{"position", 0.5}}, {}});
    service.append_event(reading, {EventType::session_completed, nlohmann::json::object(), {}});

    for (auto [condition, script_id] : {std::pair{orch::Condition::qa_teacher, "form-function"},
                                        std::pair{orch::Condition::qa_generated, "cells-script"}}) {
        auto id = service.create_session(condition, script_id, "cells", "q").session_id;
        service.append_event(id, {EventType::lesson_scrolled, nlohmann::json::object(), {}});
        for (int i = 0; i < 20 && service.get(id).state.phase == orch::Phase::active; ++i)
            service.append_event(id, {EventType::user_message, {{"text", "The membrane controls what enters."}}, {}});
        c.expect(service.get(id).state.phase == orch::Phase::completed, "qa session did not complete");
    }

    std::mt19937_64 rng(37);
    testkit::simulate_service(service, provider, script, rng);

    std::size_t logs = 0;
    for (const auto& log : session::EventStore::read_all(dir.path() / "sessions")) {
        ++logs;
        for (const auto& issue : analytics::lint_log(log))
            c.expect(false, issue.session_id + " seq " + std::to_string(issue.seq) + ": " + issue.message);
    }
    c.expect(logs == 4, "expected four session logs, found " + std::to_string(logs));
}

}  // namespace

int main() {
    run("scripted_end_to_end", scripted_end_to_end);
    run("gain_arithmetic", gain_arithmetic);
    run("correlation_oracle", correlation_oracle);
    run("summary_oracle", summary_oracle);
    run("classifier_totality", classifier_totality);
    run("script_round_trip", script_round_trip);
    run("no_skip_invariant", no_skip);
    run("condition_isolation", condition_isolation);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
