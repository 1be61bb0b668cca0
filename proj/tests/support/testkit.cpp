#include "testkit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>

#include <nlohmann/json.hpp>

#include "trialogue/io.hpp"

namespace testkit {

using namespace trialogue;

fs::path fixture(const std::string& name) { return fs::path(TRIALOGUE_FIXTURE_DIR) / name; }

authoring::TutoringScript load_fixture_script(const std::string& name) { return authoring::load_script(fixture(name)); }

authoring::LessonText load_fixture_lesson() { return authoring::LessonText::from_file(fixture("cells_lesson.json")); }

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("trialogue-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
    static const std::vector<std::string> pieces = {
        "cell", "membrane", "\"quoted\"", "back\\slash", "tab\there", "line\nbreak", "caf\xc3\xa9",
        "\xe2\x88\x91", "{brace}", "100%", "a/b", "\xf0\x9f\x94\xac", "ATP", "x<y", "&amp;", "\x01" "ctl"};
    std::uniform_int_distribution<std::size_t> n(1, max_words), pick(0, pieces.size() - 1);
    std::string out = "Word";
    for (std::size_t i = 0, k = n(rng); i < k; ++i) out += " " + pieces[pick(rng)];
    return out + ".";
}

}  // namespace

authoring::TutoringScript random_script(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nq(1, 6), ne(1, 5);
    authoring::TutoringScript s;
    s.script_id = "script-" + std::to_string(rng() % 100000);
    s.lesson_id = "lesson-" + random_text(rng, 2);
    const int questions = nq(rng);
    for (int q = 1; q <= questions; ++q) {
        authoring::Question question;
        question.question_id = "q" + std::to_string(q);
        question.text = random_text(rng, 12);
        question.solution_text = random_text(rng, 30);
        const int expectations = ne(rng);
        for (int e = 1; e <= expectations; ++e)
            question.expectations.push_back({question.question_id + "e" + std::to_string(e), question.question_id,
                                              random_text(rng, 10)});
        s.questions.push_back(std::move(question));
    }
    return s;
}

PlannedTurn plan_turn(const orch::SessionState& state, const authoring::TutoringScript& script,
                      llm::ScriptedProvider& provider, std::mt19937_64& rng, const LearnerPolicy& policy) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    static int counter = 0;
    ++counter;
    if (u(rng) < policy.p_help) {
        provider.then("Task: riley", "Riley hint " + std::to_string(counter));
        return {true, ""};
    }

    const bool last = state.question_cursor + 1 >= script.questions.size();
    auto pending = state.pending_for_current(script);
    auto queue_completion = [&] {
        if (last) {
            provider.then("Task: ruffle", "Thanks for teaching me! " + std::to_string(counter));
        } else {
            provider.then("Task: ruffle", "Great explanation " + std::to_string(counter));
            provider.then("Task: ruffle", "Next question " + std::to_string(counter));
        }
    };

    if (pending.empty()) {
        // A revision arrived together with full coverage; no judge call.
        queue_completion();
        return {false, "Let me restate that correctly."};
    }

    std::shuffle(pending.begin(), pending.end(), rng);
    std::uniform_int_distribution<std::size_t> k(0, std::min(policy.max_cover, pending.size()));
    const auto cover = k(rng);
    const bool misconception = u(rng) < policy.p_misconception;

    std::string verdict, message = "Here is what I know:";
    const auto ordered = state.pending_for_current(script);
    for (const auto& id : ordered) {
        const bool covered = std::find(pending.begin(), pending.begin() + cover, id) != pending.begin() + cover;
        verdict += id + (covered ? ": covered\n" : ": not covered\n");
        if (covered) message += " " + script.find_expectation(id)->text;
    }
    verdict += misconception ? "misconception: yes - mixes up two organelles\n" : "misconception: no\n";
    provider.then("Task: judge_coverage", verdict);

    if (misconception)
        provider.then("Task: riley", "Please revise " + std::to_string(counter));
    else if (cover < ordered.size())
        provider.then("Task: ruffle", "Tell me more " + std::to_string(counter));
    else
        queue_completion();
    if (misconception) message += " Also, ribosomes make ATP.";
    return {false, message};
}

Simulation simulate_engine(const orch::Engine& engine, const authoring::TutoringScript& script, std::mt19937_64& rng,
                           const LearnerPolicy& policy, std::size_t max_turns) {
    llm::ScriptedProvider provider;
    Simulation sim;
    sim.state = engine.start_session("sim", orch::Condition::cts).state;
    while (sim.state.phase == orch::Phase::active && sim.turns < max_turns) {
        auto turn = plan_turn(sim.state, script, provider, rng, policy);
        auto t = turn.help ? engine.handle_help_request(sim.state, provider)
                           : engine.handle_user_message(sim.state, turn.text, provider);
        sim.state = std::move(t.state);
        sim.trajectory.push_back(sim.state);
        ++sim.turns;
    }
    return sim;
}

std::string simulate_service(session::SessionService& service, std::shared_ptr<llm::ScriptedProvider> provider,
                             const authoring::TutoringScript& script, std::mt19937_64& rng,
                             const LearnerPolicy& policy, std::size_t max_turns) {
    auto d = service.create_session(orch::Condition::cts, script.script_id, script.lesson_id, "sim-learner");
    auto state = service.get(d.session_id).state;
    for (std::size_t turn = 0; state.phase == orch::Phase::active && turn < max_turns; ++turn) {
        if (turn % 4 == 1) service.append_event(d.session_id, {session::EventType::lesson_scrolled, {{"position", 0.5}}, {}});
        auto planned = plan_turn(state, script, *provider, rng, policy);
        session::InboundEvent ev;
        ev.type = planned.help ? session::EventType::help_requested : session::EventType::user_message;
        if (!planned.help) ev.payload = {{"text", planned.text}};
        state = service.append_event(d.session_id, ev).state;
    }
    return d.session_id;
}

void seed_service(session::SessionService& service) {
    service.put_lesson(load_fixture_lesson());
    service.put_script(load_fixture_script("cells_script.json"), session::ScriptOrigin::generated);
    service.put_script(load_fixture_script("form_function_script.json"), session::ScriptOrigin::teacher);
    auto read = [](const char* name) { return nlohmann::json::parse(io::read_file(fixture(name))); };
    service.set_test_form("A", session::TestInstrument::from_json(read("test_A.json")));
    service.set_test_form("B", session::TestInstrument::from_json(read("test_B.json")));
    service.set_survey(session::SurveyInstrument::from_json(read("survey.json")));
}

}  // namespace testkit
