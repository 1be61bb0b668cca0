#include "trialogue/session/service.hpp"

#include <chrono>
#include <cstdio>

#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/session/replay.hpp"

namespace trialogue::session {

namespace fs = std::filesystem;
namespace orch = trialogue::orchestration;
using nlohmann::json;

std::string_view to_string(ScriptOrigin o) { return o == ScriptOrigin::teacher ? "teacher" : "generated"; }

ScriptOrigin script_origin_from_string(std::string_view s) {
    if (s == "teacher") return ScriptOrigin::teacher;
    if (s == "generated") return ScriptOrigin::generated;
    throw PreconditionError("unknown script origin '" + std::string(s) + "'");
}

struct SessionService::Snapshot {
    std::vector<SessionEvent> events;
    orch::SessionState state;
    std::string lesson_id;
    std::string participant_id;
    json test_forms;
};

struct SessionService::Slot {
    std::mutex mutex;
    std::shared_ptr<const Snapshot> snapshot;
    std::shared_ptr<const orch::Engine> engine;

    std::shared_ptr<const Snapshot> read() {
        std::lock_guard lock(mutex);
        return snapshot;
    }
};

namespace {

json script_json(const authoring::TutoringScript& script) { return json::parse(authoring::serialize_script(script)); }

}  // namespace

SessionService::SessionService(fs::path data_dir, std::shared_ptr<llm::CompletionProvider> provider,
                               ServiceOptions options)
    : data_dir_(std::move(data_dir)), provider_(std::move(provider)), options_(std::move(options)) {
    for (const char* sub : {"lessons", "scripts", "instruments", "sessions"}) fs::create_directories(data_dir_ / sub);
    store_ = std::make_unique<EventStore>(data_dir_ / "sessions");

    for (const auto& entry : fs::directory_iterator(data_dir_ / "lessons")) {
        if (entry.path().extension() != ".json") continue;
        auto lesson = authoring::LessonText::from_file(entry.path());
        auto id = lesson.lesson_id;
        lessons_.emplace(id, std::move(lesson));
    }

    json origins = json::object();
    if (fs::exists(data_dir_ / "scripts" / "origins.json"))
        origins = json::parse(io::read_file(data_dir_ / "scripts" / "origins.json"));
    for (const auto& entry : fs::directory_iterator(data_dir_ / "scripts")) {
        if (entry.path().extension() != ".json" || entry.path().filename() == "origins.json") continue;
        auto script = authoring::load_script(entry.path());
        auto id = script.script_id;
        auto origin = script_origin_from_string(origins.value(id, "teacher"));
        scripts_.emplace(id, std::make_pair(std::move(script), origin));
    }

    for (const char* form : {"A", "B"}) {
        auto path = data_dir_ / "instruments" / (std::string("test_") + form + ".json");
        if (fs::exists(path)) test_forms_[form] = TestInstrument::from_json(json::parse(io::read_file(path)));
    }
    if (auto path = data_dir_ / "instruments" / "survey.json"; fs::exists(path))
        survey_ = SurveyInstrument::from_json(json::parse(io::read_file(path)));

    created_count_ = store_->session_ids().size();
}

SessionService::~SessionService() = default;

std::int64_t SessionService::now() const {
    if (options_.clock) return options_.clock();
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void SessionService::put_lesson(const authoring::LessonText& lesson) {
    lesson.validate();
    json j = {{"lesson_id", lesson.lesson_id}, {"title", lesson.title}, {"body", lesson.body}};
    std::unique_lock lock(registry_mutex_);
    io::write_file_atomic(data_dir_ / "lessons" / (lesson.lesson_id + ".json"), j.dump(2) + "\n");
    lessons_[lesson.lesson_id] = lesson;
}

authoring::LessonText SessionService::lesson(const std::string& lesson_id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = lessons_.find(lesson_id);
    if (it == lessons_.end()) throw UnknownLesson("unknown lesson " + lesson_id);
    return it->second;
}

void SessionService::put_script(const authoring::TutoringScript& script, ScriptOrigin origin) {
    if (auto violations = authoring::check_structure(script); !violations.empty())
        throw InvalidScript("script " + script.script_id + ": " + violations.front().message);
    std::unique_lock lock(registry_mutex_);
    authoring::save_script(script, data_dir_ / "scripts" / (script.script_id + ".json"));
    scripts_[script.script_id] = {script, origin};
    json origins = json::object();
    for (const auto& [id, entry] : scripts_) origins[id] = to_string(entry.second);
    io::write_file_atomic(data_dir_ / "scripts" / "origins.json", origins.dump(2) + "\n");
}

std::pair<authoring::TutoringScript, ScriptOrigin> SessionService::script(const std::string& script_id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = scripts_.find(script_id);
    if (it == scripts_.end()) throw UnknownScript("unknown script " + script_id);
    return it->second;
}

authoring::TutoringScript SessionService::generate_script(const std::string& lesson_id, std::size_t question_count) {
    auto source = lesson(lesson_id);
    authoring::AuthoringConfig config;
    config.target_question_count = question_count;
    config.bounds = options_.bounds;
    config.templates = options_.templates;
    config.temperature = options_.engine.temperature;
    config.model_id = options_.engine.model_id;
    auto script = authoring::author_script(source, config, *provider_);
    put_script(script, ScriptOrigin::generated);
    return script;
}

void SessionService::set_test_form(const std::string& form, const TestInstrument& instrument) {
    instrument.validate();
    std::unique_lock lock(registry_mutex_);
    io::write_file_atomic(data_dir_ / "instruments" / ("test_" + form + ".json"), instrument.to_json().dump(2) + "\n");
    test_forms_[form] = instrument;
}

void SessionService::set_survey(const SurveyInstrument& survey) {
    survey.validate();
    std::unique_lock lock(registry_mutex_);
    io::write_file_atomic(data_dir_ / "instruments" / "survey.json", survey.to_json().dump(2) + "\n");
    survey_ = survey;
}

SessionDescriptor SessionService::create_session(orch::Condition condition, const std::string& script_id,
                                                 const std::string& lesson_id, const std::string& participant_id) {
    auto [script, origin] = this->script(script_id);
    auto source = lesson(lesson_id);
    if (orch::is_qa(condition) || condition == orch::Condition::cts) {
        const auto needed = condition == orch::Condition::qa_teacher ? ScriptOrigin::teacher : ScriptOrigin::generated;
        if (origin != needed)
            throw ConditionScriptMismatch(std::string(orch::to_string(condition)) + " needs a " +
                                          std::string(to_string(needed)) + " script, " + script_id + " is " +
                                          std::string(to_string(origin)));
    }

    auto engine = std::make_shared<const orch::Engine>(script, source, options_.templates, options_.engine);

    std::lock_guard create_lock(create_mutex_);
    std::string session_id;
    do {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%06zu", ++created_count_);
        session_id = buf;
    } while (store_->exists(session_id));

    // Counterbalanced test forms, assigned round-robin.
    const bool a_first = created_count_ % 2 == 1;
    json forms = {{"pre", a_first ? "A" : "B"}, {"post", a_first ? "B" : "A"}};

    auto transition = engine->start_session(session_id, condition);
    const auto ts = now();

    std::vector<SessionEvent> events;
    events.push_back({session_id, 1, ts, EventType::session_created,
                      {{"condition", orch::to_string(condition)},
                       {"script_id", script_id},
                       {"lesson_id", lesson_id},
                       {"participant_id", participant_id},
                       {"test_forms", forms},
                       {"script", script_json(script)}}});
    for (const auto& eff : transition.effects) {
        auto [type, payload] = encode_effect(eff);
        events.push_back({session_id, events.size() + 1, ts, type, std::move(payload)});
    }
    store_->append_batch(session_id, events);
    store_->add_index_entry({{"session_id", session_id},
                             {"participant_id", participant_id},
                             {"condition", orch::to_string(condition)},
                             {"script_id", script_id},
                             {"lesson_id", lesson_id},
                             {"created_ms", ts}});

    auto slot = std::make_shared<Slot>();
    auto snap = std::make_shared<Snapshot>();
    snap->events = events;
    snap->state = transition.state;
    snap->lesson_id = lesson_id;
    snap->participant_id = participant_id;
    snap->test_forms = forms;
    slot->snapshot = std::move(snap);
    slot->engine = std::move(engine);
    {
        std::lock_guard lock(slots_mutex_);
        slots_[session_id] = slot;
    }
    return {session_id, condition, script_id, lesson_id, participant_id, transition.actions, events};
}

std::shared_ptr<SessionService::Slot> SessionService::slot(const std::string& session_id) const {
    std::lock_guard lock(slots_mutex_);
    if (auto it = slots_.find(session_id); it != slots_.end()) return it->second;

    auto events = store_->load(session_id);
    auto replayed = replay_log(events);
    auto snap = std::make_shared<Snapshot>();
    snap->state = replayed.state;
    snap->lesson_id = replayed.lesson_id;
    snap->participant_id = replayed.participant_id;
    snap->test_forms = events.front().payload.value("test_forms", json::object());
    snap->events = std::move(events);

    auto slot = std::make_shared<Slot>();
    slot->engine = std::make_shared<const orch::Engine>(replayed.script, lesson(replayed.lesson_id),
                                                        options_.templates, options_.engine);
    slot->snapshot = std::move(snap);
    slots_[session_id] = slot;
    return slot;
}

json SessionService::test_payload(const Snapshot& snap, const json& inbound) const {
    const auto phase = inbound.value("phase", "");
    if (phase != "pre" && phase != "post") throw PreconditionError("test phase must be \"pre\" or \"post\"");
    const auto form = snap.test_forms.value(phase, "A");

    std::shared_lock lock(registry_mutex_);
    auto it = test_forms_.find(form);
    if (it == test_forms_.end()) throw PreconditionError("test form " + form + " is not configured");
    const auto& instrument = it->second;

    if (inbound.contains("manual_scores")) {
        const auto& scores = inbound["manual_scores"];
        if (!scores.is_object()) throw PreconditionError("manual_scores must map item ids to points");
        for (const auto& [item_id, points] : scores.items()) {
            const auto* item = instrument.find(item_id);
            if (item == nullptr) throw UnknownItem("form " + form + " has no item " + item_id);
            if (item->kind != ItemKind::free_form)
                throw PreconditionError("item " + item_id + " is scored automatically");
            if (!points.is_number() || points.get<double>() < 0.0 || points.get<double>() > 1.0)
                throw PreconditionError("manual score for " + item_id + " must be within [0, 1]");
        }
        return {{"phase", phase}, {"form", form}, {"instrument_id", instrument.instrument_id}, {"manual_scores", scores}};
    }

    const auto responses = inbound.value("responses", json::object());
    auto score = score_test(instrument, responses);
    return {{"phase", phase},
            {"form", form},
            {"instrument_id", instrument.instrument_id},
            {"responses", responses},
            {"auto_score", score.auto_score},
            {"pending_manual", score.pending_manual},
            {"item_points", score.item_points},
            {"max_score", instrument.max_score()}};
}

AppendResult SessionService::append_event(const std::string& session_id, const InboundEvent& inbound) {
    auto s = slot(session_id);
    auto snap = s->read();
    const auto base = snap->events.size();
    if (inbound.expected_seq && *inbound.expected_seq != base)
        throw SequenceConflict("session " + session_id + " is at seq " + std::to_string(base));
    if (snap->state.phase != orch::Phase::active && !allowed_after_completion(inbound.type))
        throw SessionClosed("session " + session_id + " is " + std::string(orch::to_string(snap->state.phase)));

    AppendResult out;
    out.state = snap->state;
    std::vector<std::pair<EventType, json>> batch;
    auto take = [&](orch::Transition t) {
        for (const auto& eff : t.effects) batch.push_back(encode_effect(eff));
        out.actions = std::move(t.actions);
        out.state = std::move(t.state);
    };

    const auto& engine = *s->engine;
    const auto& p = inbound.payload;
    switch (inbound.type) {
        case EventType::user_message: {
            if (!p.contains("text") || !p["text"].is_string()) throw PreconditionError("message needs a text field");
            const auto text = p["text"].get<std::string>();
            if (orch::is_qa(snap->state.condition))
                take(engine.qa_answer(snap->state, text, options_.provider_judges_qa ? provider_.get() : nullptr));
            else
                take(engine.handle_user_message(snap->state, text, *provider_));
            break;
        }
        case EventType::help_requested:
            take(engine.handle_help_request(snap->state, *provider_));
            break;
        case EventType::session_completed:
            take(engine.finish_reading(snap->state));
            break;
        case EventType::lesson_scrolled: {
            json payload = json::object();
            if (p.contains("position")) {
                if (!p["position"].is_number()) throw PreconditionError("scroll position must be a number");
                payload["position"] = p["position"];
            }
            batch.emplace_back(EventType::lesson_scrolled, std::move(payload));
            break;
        }
        case EventType::test_submitted:
            batch.emplace_back(EventType::test_submitted, test_payload(*snap, p));
            break;
        case EventType::survey_submitted: {
            SurveyOutcome outcome;
            {
                std::shared_lock lock(registry_mutex_);
                if (!survey_) throw PreconditionError("no survey instrument is configured");
                outcome = evaluate_survey(*survey_, p.value("responses", json::object()));
            }
            batch.emplace_back(EventType::survey_submitted, json{{"responses", outcome.responses},
                                                                  {"attention_pass", outcome.attention_pass},
                                                                  {"lookup_denied", outcome.lookup_denied}});
            break;
        }
        default:
            throw PreconditionError("clients cannot append " + std::string(to_string(inbound.type)) + " events");
    }

    std::lock_guard lock(s->mutex);
    if (s->snapshot->events.size() != base)
        throw SequenceConflict("session " + session_id + " advanced while this event was processed");
    const auto ts = now();
    auto next = std::make_shared<Snapshot>(*s->snapshot);
    for (auto& [type, payload] : batch) {
        SessionEvent e{session_id, next->events.size() + 1, ts, type, std::move(payload)};
        out.events.push_back(e);
        next->events.push_back(std::move(e));
    }
    store_->append_batch(session_id, out.events);
    next->state = out.state;
    s->snapshot = std::move(next);
    return out;
}

SessionView SessionService::get(const std::string& session_id) const {
    auto snap = slot(session_id)->read();
    return {snap->state, snap->events, snap->lesson_id, snap->participant_id};
}

orch::SessionState SessionService::replay(const std::string& session_id) const {
    return replay_log(store_->load(session_id)).state;
}

std::vector<std::string> SessionService::session_ids() const { return store_->session_ids(); }

}  // namespace trialogue::session
