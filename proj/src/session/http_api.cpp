#include "trialogue/session/http_api.hpp"

#include <httplib.h>

#include "trialogue/errors.hpp"

namespace trialogue::session {

namespace orch = trialogue::orchestration;
using nlohmann::json;

namespace {

struct Status {
    int code;
    const char* name;
};

Status classify(const std::exception& e) {
    if (dynamic_cast<const UnknownSession*>(&e)) return {404, "UnknownSession"};
    if (dynamic_cast<const UnknownScript*>(&e)) return {404, "UnknownScript"};
    if (dynamic_cast<const UnknownLesson*>(&e)) return {404, "UnknownLesson"};
    if (dynamic_cast<const SessionClosed*>(&e)) return {409, "SessionClosed"};
    if (dynamic_cast<const SequenceConflict*>(&e)) return {409, "SequenceConflict"};
    if (dynamic_cast<const ConditionMismatch*>(&e)) return {422, "ConditionMismatch"};
    if (dynamic_cast<const ConditionScriptMismatch*>(&e)) return {422, "ConditionScriptMismatch"};
    if (dynamic_cast<const ProviderError*>(&e)) return {502, "ProviderError"};
    if (dynamic_cast<const AuthError*>(&e)) return {502, "AuthError"};
    if (dynamic_cast<const EmptyResponse*>(&e)) return {502, "EmptyResponse"};
    if (dynamic_cast<const ParseError*>(&e)) return {502, "ParseError"};
    if (dynamic_cast<const UnknownItem*>(&e)) return {400, "UnknownItem"};
    if (dynamic_cast<const SchemaError*>(&e)) return {400, "SchemaError"};
    if (dynamic_cast<const VersionError*>(&e)) return {400, "VersionError"};
    if (dynamic_cast<const InvalidScript*>(&e)) return {400, "InvalidScript"};
    if (dynamic_cast<const EmptyScript*>(&e)) return {502, "EmptyScript"};
    if (dynamic_cast<const MissingExpectations*>(&e)) return {502, "MissingExpectations"};
    if (dynamic_cast<const PreconditionError*>(&e)) return {400, "PreconditionError"};
    if (dynamic_cast<const json::exception*>(&e)) return {400, "BadRequest"};
    if (dynamic_cast<const CorruptLog*>(&e)) return {500, "CorruptLog"};
    return {500, "InternalError"};
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body);
    if (!j.is_object()) throw PreconditionError("request body must be a JSON object");
    return j;
}

json events_json(const std::vector<SessionEvent>& events) {
    json out = json::array();
    for (const auto& e : events) out.push_back(to_json(e));
    return out;
}

json actions_json(const std::vector<orch::DialogueAction>& actions) {
    json out = json::array();
    for (const auto& a : actions) out.push_back(to_json(a));
    return out;
}

json result_json(const AppendResult& r) {
    return {{"events", events_json(r.events)}, {"actions", actions_json(r.actions)}, {"state", to_json(r.state)}};
}

std::optional<std::uint64_t> expected_seq(const json& body) {
    if (!body.contains("expected_seq") || body["expected_seq"].is_null()) return std::nullopt;
    return body["expected_seq"].get<std::uint64_t>();
}

}  // namespace

struct HttpApi::Impl {
    SessionService& service;
    httplib::Server server;

    explicit Impl(SessionService& s) : service(s) { routes(); }

    template <class F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const std::exception& e) {
                auto [code, name] = classify(e);
                send(res, code, {{"error", name}, {"message", e.what()}});
            }
        };
    }

    void append(const httplib::Request& req, httplib::Response& res, EventType type, json payload) {
        const auto body = body_of(req);
        InboundEvent ev{type, std::move(payload), expected_seq(body)};
        send(res, 200, result_json(service.append_event(req.matches[1], ev)));
    }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            auto d = service.create_session(orch::condition_from_string(body.at("condition").get<std::string>()),
                                            body.at("script_id").get<std::string>(),
                                            body.at("lesson_id").get<std::string>(),
                                            body.value("participant_id", ""));
            send(res, 201, {{"session_id", d.session_id},
                            {"condition", orch::to_string(d.condition)},
                            {"script_id", d.script_id},
                            {"lesson_id", d.lesson_id},
                            {"participant_id", d.participant_id},
                            {"actions", actions_json(d.actions)},
                            {"events", events_json(d.events)}});
        }));

        server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto view = service.get(req.matches[1]);
            send(res, 200, {{"session_id", std::string(req.matches[1])},
                            {"lesson_id", view.lesson_id},
                            {"participant_id", view.participant_id},
                            {"state", to_json(view.state)},
                            {"events", events_json(view.events)}});
        }));

        server.Post(R"(/sessions/([^/]+)/messages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            append(req, res, EventType::user_message, {{"text", body.at("text").get<std::string>()}});
        }));

        server.Post(R"(/sessions/([^/]+)/help)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            append(req, res, EventType::help_requested, json::object());
        }));

        server.Post(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            const auto type = event_type_from_string(body.at("type").get<std::string>());
            if (type != EventType::lesson_scrolled && type != EventType::session_completed)
                throw PreconditionError("only lesson_scrolled and session_completed are navigation events");
            append(req, res, type, body.value("payload", json::object()));
        }));

        server.Post(R"(/sessions/([^/]+)/test)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            append(req, res, EventType::test_submitted,
                   {{"phase", body.value("phase", "")}, {"responses", body.value("responses", json::object())}});
        }));

        server.Post(R"(/sessions/([^/]+)/manual-scores)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            append(req, res, EventType::test_submitted,
                   {{"phase", body.value("phase", "")}, {"manual_scores", body.at("manual_scores")}});
        }));

        server.Post(R"(/sessions/([^/]+)/survey)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            append(req, res, EventType::survey_submitted, {{"responses", body.value("responses", json::object())}});
        }));

        server.Get(R"(/lessons/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto l = service.lesson(req.matches[1]);
            send(res, 200, {{"lesson_id", l.lesson_id}, {"title", l.title}, {"body", l.body}});
        }));

        server.Post("/scripts:generate", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_of(req);
            auto script = service.generate_script(body.at("lesson_id").get<std::string>(),
                                                  body.value("question_count", std::size_t{4}));
            res.status = 201;
            res.set_header("X-Script-Origin", "generated");
            res.set_content(authoring::serialize_script(script), "application/json");
        }));

        server.Get(R"(/scripts/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto [script, origin] = service.script(req.matches[1]);
            res.set_header("X-Script-Origin", std::string(to_string(origin)));
            res.set_content(authoring::serialize_script(script), "application/json");
        }));

        server.Put(R"(/scripts/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto script = authoring::parse_script(req.body);
            if (script.script_id != req.matches[1].str())
                throw PreconditionError("script_id " + script.script_id + " does not match the URL");
            const auto origin =
                script_origin_from_string(req.has_param("origin") ? req.get_param_value("origin") : "teacher");
            service.put_script(script, origin);
            res.set_header("X-Script-Origin", std::string(to_string(origin)));
            res.set_content(authoring::serialize_script(script), "application/json");
        }));
    }
};

HttpApi::HttpApi(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpApi::~HttpApi() { stop(); }

bool HttpApi::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }
int HttpApi::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpApi::listen_after_bind() { return impl_->server.listen_after_bind(); }
void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }
void HttpApi::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}
bool HttpApi::running() const { return impl_->server.is_running(); }

}  // namespace trialogue::session
