#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "testkit.hpp"
#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/llm/scripted_provider.hpp"
#include "trialogue/session/event_store.hpp"
#include "trialogue/session/instruments.hpp"
#include "trialogue/session/replay.hpp"
#include "trialogue/session/service.hpp"

using namespace trialogue;
using namespace trialogue::session;
namespace orch = trialogue::orchestration;
using llm::ScriptedProvider;
using nlohmann::json;

namespace {

TestInstrument form_a() { return TestInstrument::from_json(json::parse(io::read_file(testkit::fixture("test_A.json")))); }

SurveyInstrument survey() {
    return SurveyInstrument::from_json(json::parse(io::read_file(testkit::fixture("survey.json"))));
}

json passing_survey(int lookup = 1) {
    return {{"engagement", 6}, {"understanding", 5}, {"remembering", 5}, {"interruption", 2}, {"coherence", 6},
            {"attention1", 7}, {"support", 6},       {"enjoyment", 6},   {"attention2", 1},   {"lookup", lookup}};
}

struct ServiceFixture {
    testkit::TempDir dir;
    std::shared_ptr<ScriptedProvider> provider = std::make_shared<ScriptedProvider>();
    std::int64_t clock = 1'700'000'000'000;
    std::unique_ptr<SessionService> service;

    ServiceFixture() { open(); }

    void open() {
        ServiceOptions options;
        options.clock = [this] { return clock += 1000; };
        service = std::make_unique<SessionService>(dir.path(), provider, options);
        if (service->session_ids().empty() && !std::filesystem::exists(dir.path() / "lessons" / "cells.json"))
            testkit::seed_service(*service);
    }

    std::vector<EventType> types(const std::vector<SessionEvent>& events) {
        std::vector<EventType> out;
        for (const auto& e : events) out.push_back(e.type);
        return out;
    }
};

SessionEvent ev(std::uint64_t seq, EventType type, json payload = json::object()) {
    return {"s", seq, static_cast<std::int64_t>(seq) * 1000, type, std::move(payload)};
}

}  // namespace

TEST_CASE("events serialize as one sorted JSON line") {
    SessionEvent e{"s000001", 3, 1234, EventType::user_message, {{"text", "hi \"there\"\n"}}};
    const auto line = to_json_line(e);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(line.rfind("{\"payload\"", 0) == 0);
    CHECK(from_json_line(line) == e);
    CHECK_THROWS_AS(from_json_line("{\"seq\": 1}"), SchemaError);
    CHECK_THROWS_AS(from_json_line("not json"), SchemaError);
    CHECK(event_type_from_string("judgment_degraded") == EventType::judgment_degraded);
    CHECK(allowed_after_completion(EventType::survey_submitted));
    CHECK_FALSE(allowed_after_completion(EventType::lesson_scrolled));
}

TEST_CASE("effects and events map both ways") {
    orch::DialogueAction a{orch::Actor::ruffle, orch::ActionKind::follow_up, "why?", "q1", "q1e2"};
    std::vector<orch::Effect> effects = {orch::effect::LearnerSaid{"x"},      orch::effect::AgentSaid{a},
                                         orch::effect::ExpectationCovered{"q1e1"}, orch::effect::HelpRequested{},
                                         orch::effect::RevisionRequested{"n"}, orch::effect::QuestionAdvanced{},
                                         orch::effect::SessionCompleted{},     orch::effect::JudgmentDegraded{"r"}};
    for (const auto& eff : effects) {
        auto [type, payload] = encode_effect(eff);
        auto back = decode_effect({"s", 1, 0, type, payload});
        REQUIRE(back);
        CHECK(encode_effect(*back) == std::make_pair(type, payload));
    }
    CHECK_FALSE(decode_effect(ev(1, EventType::lesson_scrolled)));
    CHECK_FALSE(decode_effect(ev(1, EventType::test_submitted)));
}

TEST_CASE("log sequence checks") {
    CHECK_THROWS_AS(check_log_sequence({}), CorruptLog);
    CHECK_THROWS_AS(replay_log({}), CorruptLog);
    CHECK_NOTHROW(check_log_sequence({ev(1, EventType::session_created), ev(2, EventType::lesson_scrolled)}));
    CHECK_THROWS_AS(check_log_sequence({ev(1, EventType::session_created), ev(3, EventType::lesson_scrolled)}),
                    CorruptLog);
    CHECK_THROWS_AS(check_log_sequence({ev(1, EventType::lesson_scrolled)}), CorruptLog);
    CHECK_THROWS_AS(check_log_sequence({ev(1, EventType::session_created), ev(2, EventType::session_completed),
                                        ev(3, EventType::user_message)}),
                    CorruptLog);
    CHECK_NOTHROW(check_log_sequence({ev(1, EventType::session_created), ev(2, EventType::session_completed),
                                      ev(3, EventType::test_submitted), ev(4, EventType::survey_submitted)}));
    auto foreign = ev(2, EventType::lesson_scrolled);
    foreign.session_id = "other";
    CHECK_THROWS_AS(check_log_sequence({ev(1, EventType::session_created), foreign}), CorruptLog);
}

TEST_CASE("event store appends durably and recovers torn batches") {
    testkit::TempDir dir;
    std::vector<SessionEvent> batch = {ev(1, EventType::session_created), ev(2, EventType::lesson_scrolled)};
    {
        EventStore store(dir.path());
        store.append_batch("s", batch);
        store.add_index_entry({{"session_id", "s"}});
        CHECK(store.load("s") == batch);
        CHECK(store.session_ids() == std::vector<std::string>{"s"});
        CHECK(store.index().size() == 1);
        CHECK_THROWS_AS(store.load("missing"), UnknownSession);
    }
    SUBCASE("a half-written append is truncated and redone") {
        const auto log = dir.path() / "s.jsonl";
        const auto offset = std::filesystem::file_size(log);
        const std::string data = to_json_line(ev(3, EventType::lesson_scrolled)) + "\n" +
                                 to_json_line(ev(4, EventType::lesson_scrolled)) + "\n";
        io::write_file_atomic(dir.path() / "s.wal", json{{"offset", offset}, {"data", data}}.dump());
        {
            std::ofstream torn(log, std::ios::app);
            torn << data.substr(0, data.size() / 2);
        }
        EventStore store(dir.path());
        auto events = store.load("s");
        REQUIRE(events.size() == 4);
        CHECK(events[3].seq == 4);
        CHECK_FALSE(std::filesystem::exists(dir.path() / "s.wal"));
    }
    SUBCASE("a WAL whose append already completed is not applied twice") {
        const auto log = dir.path() / "s.jsonl";
        const auto offset = std::filesystem::file_size(log);
        const std::string data = to_json_line(ev(3, EventType::lesson_scrolled)) + "\n";
        io::write_file_atomic(dir.path() / "s.wal", json{{"offset", offset}, {"data", data}}.dump());
        {
            std::ofstream full(log, std::ios::app);
            full << data;
        }
        EventStore store(dir.path());
        CHECK(store.load("s").size() == 3);
    }
}

TEST_CASE("score_test") {
    const auto a = form_a();
    SUBCASE("two choices right, one blank of three, free form pending") {
        auto s = score_test(a, {{"A-mc1", 1}, {"A-mc2", 2}, {"A-fb1", "Ribosomes"}, {"A-fb2", "glucose"},
                                {"A-ff1", "The folds add surface."}});
        CHECK(s.auto_score == 3.0);
        CHECK(s.pending_manual == std::vector<std::string>{"A-ff1"});
    }
    SUBCASE("blank answers are trimmed and case-folded") {
        auto custom = TestInstrument::from_json(
            {{"instrument_id", "t"}, {"items", {{{"item_id", "b"}, {"kind", "fill_blank"}, {"key", {"mitochondria"}}}}}});
        CHECK(score_test(custom, {{"b", " Mitochondria "}}).auto_score == 1.0);
    }
    SUBCASE("everything right plus a manual point is six") {
        auto s = score_test(a, {{"A-mc1", 1}, {"A-mc2", 2}, {"A-fb1", "ribosomes"}, {"A-fb2", "atp"}, {"A-fb3", "golgi"}});
        CHECK(s.auto_score + 1.0 == 6.0);
        CHECK(a.max_score() == 6.0);
    }
    SUBCASE("unknown item") { CHECK_THROWS_AS(score_test(a, {{"B-mc1", 0}}), UnknownItem); }
    SUBCASE("multiple-choice key must index the options") {
        CHECK_THROWS_AS(TestInstrument::from_json({{"instrument_id", "t"},
                                                   {"items", {{{"item_id", "m"},
                                                               {"kind", "multiple_choice"},
                                                               {"options", {"a", "b"}},
                                                               {"key", 2}}}}}),
                        SchemaError);
    }
}

TEST_CASE("survey evaluation") {
    const auto s = survey();
    auto ok = evaluate_survey(s, passing_survey());
    CHECK(ok.attention_pass);
    CHECK(ok.lookup_denied);
    auto looked = evaluate_survey(s, passing_survey(3));
    CHECK_FALSE(looked.lookup_denied);
    auto failed = passing_survey();
    failed["attention2"] = 2;
    CHECK_FALSE(evaluate_survey(s, failed).attention_pass);
    auto missing = passing_survey();
    missing.erase("attention1");
    CHECK_FALSE(evaluate_survey(s, missing).attention_pass);
    auto out_of_scale = passing_survey();
    out_of_scale["support"] = 8;
    CHECK_THROWS_AS(evaluate_survey(s, out_of_scale), PreconditionError);
    CHECK_THROWS_AS(evaluate_survey(s, {{"nope", 3}}), UnknownItem);
}

TEST_CASE("participant records") {
    ParticipantRecord r;
    r.participant_id = "p1";
    r.condition = orch::Condition::cts;
    r.pre_test_score = 1.5;
    r.post_test_score = 4.0;
    r.survey = {{"engagement", 6}};
    r.attention_pass = true;
    auto back = ParticipantRecord::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    auto bad = r.to_json();
    bad["post_test_score"] = 7.0;
    CHECK_THROWS_AS(ParticipantRecord::from_json(bad), SchemaError);

    testkit::TempDir dir;
    save_records({r, back}, dir.path() / "r.json");
    CHECK(load_records(dir.path() / "r.json").size() == 2);
    io::write_file_atomic(dir.path() / "plain.json", json::array({r.to_json()}).dump());
    CHECK(load_records(dir.path() / "plain.json").size() == 1);
}

TEST_CASE("create_session") {
    ServiceFixture f;
    SUBCASE("cts: created then the opening question") {
        auto d = f.service->create_session(orch::Condition::cts, "cells-script", "cells", "p1");
        CHECK(d.session_id == "s000001");
        CHECK(f.types(d.events) == std::vector<EventType>{EventType::session_created, EventType::agent_message});
        CHECK(d.actions.size() == 1);
        CHECK(d.events[0].payload["test_forms"]["pre"] == "A");
        CHECK(f.service->store().index().size() == 1);
    }
    SUBCASE("reading: created only") {
        auto d = f.service->create_session(orch::Condition::reading, "cells-script", "cells", "p1");
        CHECK(f.types(d.events) == std::vector<EventType>{EventType::session_created});
    }
    SUBCASE("forms are counterbalanced round-robin") {
        auto a = f.service->create_session(orch::Condition::reading, "cells-script", "cells", "p1");
        auto b = f.service->create_session(orch::Condition::reading, "cells-script", "cells", "p2");
        CHECK(a.events[0].payload["test_forms"] == json{{"pre", "A"}, {"post", "B"}});
        CHECK(b.events[0].payload["test_forms"] == json{{"pre", "B"}, {"post", "A"}});
    }
    SUBCASE("script origin must fit the condition") {
        CHECK_THROWS_AS(f.service->create_session(orch::Condition::qa_generated, "form-function", "cells", "p"),
                        ConditionScriptMismatch);
        CHECK_THROWS_AS(f.service->create_session(orch::Condition::cts, "form-function", "cells", "p"),
                        ConditionScriptMismatch);
        CHECK_THROWS_AS(f.service->create_session(orch::Condition::qa_teacher, "cells-script", "cells", "p"),
                        ConditionScriptMismatch);
        CHECK_NOTHROW(f.service->create_session(orch::Condition::qa_teacher, "form-function", "cells", "p"));
    }
    SUBCASE("unknown references") {
        CHECK_THROWS_AS(f.service->create_session(orch::Condition::cts, "nope", "cells", "p"), UnknownScript);
        CHECK_THROWS_AS(f.service->create_session(orch::Condition::cts, "cells-script", "nope", "p"), UnknownLesson);
    }
}

TEST_CASE("append_event") {
    ServiceFixture f;
    auto d = f.service->create_session(orch::Condition::cts, "cells-script", "cells", "p1");
    const auto id = d.session_id;

    SUBCASE("a covering message yields user, covered and agent events in one batch") {
        f.provider->then("Task: judge_coverage", "q1e1: covered\nq1e2: not covered\nq1e3: not covered\nmisconception: no");
        f.provider->then("Task: ruffle", "And the pores?");
        auto r = f.service->append_event(id, {EventType::user_message, {{"text", "The nucleus stores DNA."}}, {}});
        CHECK(f.types(r.events) ==
              std::vector<EventType>{EventType::user_message, EventType::expectation_covered, EventType::agent_message});
        CHECK(r.events[0].seq == 3);
        CHECK(r.events[2].seq == 5);
        CHECK(r.events[0].timestamp_ms == r.events[2].timestamp_ms);
        CHECK(r.actions.size() == 1);
    }
    SUBCASE("scrolling appends one event and no reply") {
        auto r = f.service->append_event(id, {EventType::lesson_scrolled, {{"position", 0.4}}, {}});
        CHECK(f.types(r.events) == std::vector<EventType>{EventType::lesson_scrolled});
        CHECK(r.actions.empty());
        CHECK(f.provider->requests().empty());
    }
    SUBCASE("expected_seq guards against stale clients") {
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::lesson_scrolled, json::object(), 1}), SequenceConflict);
        CHECK_NOTHROW(f.service->append_event(id, {EventType::lesson_scrolled, json::object(), 2}));
    }
    SUBCASE("clients cannot write agent events") {
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::agent_message, json::object(), {}}), PreconditionError);
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::expectation_covered, {{"expectation_id", "q1e1"}}, {}}),
                        PreconditionError);
    }
    SUBCASE("reading sessions: no chat, learner completes, then only tests and surveys") {
        auto r = f.service->create_session(orch::Condition::reading, "cells-script", "cells", "p2").session_id;
        CHECK_THROWS_AS(f.service->append_event(r, {EventType::user_message, {{"text", "hi"}}, {}}), ConditionMismatch);
        CHECK_THROWS_AS(f.service->append_event(r, {EventType::help_requested, json::object(), {}}), ConditionMismatch);
        f.service->append_event(r, {EventType::session_completed, json::object(), {}});
        CHECK_THROWS_AS(f.service->append_event(r, {EventType::lesson_scrolled, json::object(), {}}), SessionClosed);
        auto t = f.service->append_event(
            r, {EventType::test_submitted, {{"phase", "post"}, {"responses", {{"A-mc1", 1}, {"A-fb2", "atp"}}}}, {}});
        CHECK(t.events[0].payload["auto_score"] == 2.0);
        CHECK(t.events[0].payload["form"] == "A");
        f.service->append_event(r, {EventType::survey_submitted, {{"responses", passing_survey()}}, {}});
        CHECK(f.service->get(r).events.size() == 4);
    }
    SUBCASE("test scoring and manual scores") {
        auto t = f.service->append_event(id, {EventType::test_submitted,
                                              {{"phase", "pre"}, {"responses", {{"A-mc1", 1}, {"A-fb1", " RIBOSOMES "}}}},
                                              {}});
        CHECK(t.events[0].payload["auto_score"] == 2.0);
        CHECK(t.events[0].payload["pending_manual"] == json::array({"A-ff1"}));
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::test_submitted,
                                                     {{"phase", "pre"}, {"manual_scores", {{"A-mc1", 1}}}}, {}}),
                        PreconditionError);
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::test_submitted,
                                                     {{"phase", "pre"}, {"manual_scores", {{"A-ff1", 2}}}}, {}}),
                        PreconditionError);
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::test_submitted,
                                                     {{"phase", "mid"}, {"responses", json::object()}}, {}}),
                        PreconditionError);
        CHECK_THROWS_AS(f.service->append_event(id, {EventType::test_submitted,
                                                     {{"phase", "pre"}, {"responses", {{"B-mc1", 0}}}}, {}}),
                        UnknownItem);
        f.service->append_event(id, {EventType::test_submitted, {{"phase", "pre"}, {"manual_scores", {{"A-ff1", 1}}}}, {}});
        auto record = derive_record(f.service->get(id).events);
        CHECK(record.pre_test_score == 3.0);
        CHECK_FALSE(record.post_test_score);
        CHECK(record.max_score == 6.0);
    }
    SUBCASE("unknown session") {
        CHECK_THROWS_AS(f.service->append_event("s999999", {EventType::lesson_scrolled, json::object(), {}}),
                        UnknownSession);
    }
}

TEST_CASE("scripted cts session end to end, then replay from disk") {
    ServiceFixture f;
    std::mt19937_64 rng(11);
    const auto script = testkit::load_fixture_script("cells_script.json");
    const auto id = testkit::simulate_service(*f.service, f.provider, script, rng);
    const auto live = f.service->get(id);
    CHECK(live.state.phase == orch::Phase::completed);
    CHECK(live.state.covered_count() == 12);
    CHECK_NOTHROW(check_log_sequence(live.events));
    CHECK(f.service->replay(id) == live.state);

    f.service->append_event(id, {EventType::test_submitted, {{"phase", "post"}, {"responses", {{"B-mc1", 2}}}}, {}});
    f.service->append_event(id, {EventType::survey_submitted, {{"responses", passing_survey()}}, {}});
    CHECK_THROWS_AS(f.service->append_event(id, {EventType::lesson_scrolled, json::object(), {}}), SessionClosed);

    // A fresh service over the same directory sees the same session.
    f.open();
    CHECK(f.service->get(id).state == live.state);
    CHECK(f.service->get(id).events.size() == live.events.size() + 2);
    auto next = f.service->create_session(orch::Condition::reading, "cells-script", "cells", "p9");
    CHECK(next.session_id == "s000002");
    auto record = derive_record(f.service->get(id).events);
    CHECK(record.attention_pass);
    CHECK(record.lookup_denied);
    CHECK(record.post_test_score == 1.0);
}

TEST_CASE("concurrent appends to one session stay gapless") {
    ServiceFixture f;
    const auto id = f.service->create_session(orch::Condition::cts, "cells-script", "cells", "p1").session_id;
    std::atomic<int> ok{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&] {
            for (int i = 0; i < 25; ++i) {
                try {
                    f.service->append_event(id, {EventType::lesson_scrolled, {{"position", i}}, {}});
                    ++ok;
                } catch (const SequenceConflict&) {
                    ++conflicts;
                }
            }
        });
    for (auto& t : threads) t.join();
    const auto events = f.service->get(id).events;
    CHECK(events.size() == 2 + static_cast<std::size_t>(ok.load()));
    CHECK(ok + conflicts == 100);
    CHECK_NOTHROW(check_log_sequence(events));
    CHECK(EventStore(f.dir.path() / "sessions").load(id) == events);
}

TEST_CASE("a lost race raises SequenceConflict and leaves the log intact") {
    ServiceFixture f;
    const auto id = f.service->create_session(orch::Condition::cts, "cells-script", "cells", "p1").session_id;
    // The judge call blocks until a competing append has committed.
    class Racer : public llm::CompletionProvider {
    public:
        std::function<void()> during;
        llm::CompletionResult complete(const llm::CompletionRequest& request) override {
            if (during) std::exchange(during, nullptr)();
            if (request.concatenated_text().find("Task: judge_coverage") != std::string::npos)
                return {"q1e1: not covered\nq1e2: not covered\nq1e3: not covered\nmisconception: no"};
            return {"Tell me more."};
        }
    };
    auto racer = std::make_shared<Racer>();
    SessionService service(f.dir.path(), racer);
    racer->during = [&] { service.append_event(id, {EventType::lesson_scrolled, json::object(), {}}); };
    CHECK_THROWS_AS(service.append_event(id, {EventType::user_message, {{"text", "hello"}}, {}}), SequenceConflict);
    const auto events = service.get(id).events;
    CHECK(events.size() == 3);
    CHECK(events.back().type == EventType::lesson_scrolled);
}
