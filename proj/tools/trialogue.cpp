// trialogue: author tutoring scripts, serve tutoring sessions, analyze logs.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trialogue/analytics/features.hpp"
#include "trialogue/analytics/report.hpp"
#include "trialogue/authoring/pipeline.hpp"
#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/llm/gateway.hpp"
#include "trialogue/llm/http_provider.hpp"
#include "trialogue/llm/offline_provider.hpp"
#include "trialogue/llm/scripted_provider.hpp"
#include "trialogue/session/event_store.hpp"
#include "trialogue/session/http_api.hpp"
#include "trialogue/session/replay.hpp"
#include "trialogue/session/service.hpp"

namespace fs = std::filesystem;
using namespace trialogue;
using nlohmann::json;

namespace {

struct ProviderFlags {
    std::string kind = "offline";
    fs::path responses;
    fs::path config;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& f) {
    cmd->add_option("--provider", f.kind, "scripted, live or offline")
        ->check(CLI::IsMember({"scripted", "live", "offline"}))
        ->capture_default_str();
    cmd->add_option("--responses", f.responses, "scripted responses file (JSON)");
    cmd->add_option("--provider-config", f.config, "live provider config file (JSON)");
}

std::shared_ptr<llm::CompletionProvider> make_provider(const ProviderFlags& f) {
    if (f.kind == "scripted") {
        if (f.responses.empty()) throw PreconditionError("--provider scripted needs --responses");
        return llm::ScriptedProvider::from_file(f.responses);
    }
    if (f.kind == "live") {
        if (f.config.empty()) throw PreconditionError("--provider live needs --provider-config");
        auto config = llm::ProviderConfig::from_file(f.config);
        return std::make_shared<llm::Gateway>(std::make_shared<llm::HttpProvider>(config), config);
    }
    return std::make_shared<llm::OfflineProvider>();
}

llm::TemplateSet templates_from(const fs::path& dir) {
    return dir.empty() ? llm::TemplateSet::defaults() : llm::TemplateSet::load(dir);
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw PreconditionError("--listen expects host:port");
    return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

std::vector<session::ParticipantRecord> records_from_logs(const fs::path& sessions_dir) {
    std::vector<session::ParticipantRecord> out;
    for (const auto& log : session::EventStore::read_all(sessions_dir)) out.push_back(session::derive_record(log));
    return out;
}

int run_author(const fs::path& lesson_path, std::size_t questions, const fs::path& out, const fs::path& template_dir,
               const ProviderFlags& pf) {
    auto lesson = authoring::LessonText::from_file(lesson_path);
    authoring::AuthoringConfig config;
    config.target_question_count = questions;
    config.templates = templates_from(template_dir);
    auto provider = make_provider(pf);
    auto script = authoring::author_script(lesson, config, *provider);
    authoring::save_script(script, out);
    std::cout << "wrote " << out.string() << ": " << script.questions.size() << " questions, "
              << script.expectation_count() << " expectations\n";
    return 0;
}

int run_serve(const fs::path& data_dir, const std::string& listen, const fs::path& template_dir,
              const ProviderFlags& pf) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    session::ServiceOptions options;
    options.templates = templates_from(template_dir);
    session::SessionService service(data_dir, make_provider(pf), options);
    session::HttpApi api(service);
    auto [host, port] = parse_listen(listen);
    if (port == 0) {
        port = api.bind_to_any_port(host);
    } else if (!api.bind(host, port)) {
        std::cerr << "cannot bind " << listen << "\n";
        return 1;
    }
    std::cout << "listening on " << host << ":" << port << " (data: " << data_dir.string() << ")" << std::endl;
    std::thread server([&] { api.listen_after_bind(); });
    int sig = 0;
    sigwait(&signals, &sig);
    api.stop();
    server.join();
    return 0;
}

int run_import(const fs::path& data_dir, const std::vector<fs::path>& lessons, const std::vector<fs::path>& scripts,
               const std::string& origin, const fs::path& test_a, const fs::path& test_b, const fs::path& survey) {
    session::SessionService service(data_dir, std::make_shared<llm::OfflineProvider>());
    for (const auto& p : lessons) {
        auto lesson = authoring::LessonText::from_file(p);
        service.put_lesson(lesson);
        std::cout << "lesson " << lesson.lesson_id << "\n";
    }
    for (const auto& p : scripts) {
        auto script = authoring::load_script(p);
        service.put_script(script, session::script_origin_from_string(origin));
        std::cout << "script " << script.script_id << " (" << origin << ")\n";
    }
    auto read_json = [](const fs::path& p) { return json::parse(io::read_file(p)); };
    if (!test_a.empty()) service.set_test_form("A", session::TestInstrument::from_json(read_json(test_a)));
    if (!test_b.empty()) service.set_test_form("B", session::TestInstrument::from_json(read_json(test_b)));
    if (!survey.empty()) service.set_survey(session::SurveyInstrument::from_json(read_json(survey)));
    return 0;
}

int run_analyze(const fs::path& data_dir, const fs::path& records_path, const fs::path& out, bool table,
                const analytics::ReportOptions& options) {
    const auto sessions = data_dir / "sessions";
    auto logs = session::EventStore::read_all(sessions);
    auto records = records_path.empty() ? records_from_logs(sessions) : session::load_records(records_path);
    auto report = analytics::build_report(logs, records, options);
    io::write_file_atomic(out, analytics::to_json(report).dump(2) + "\n");
    if (table) std::cout << analytics::render_table(report);
    return 0;
}

int run_lint(const fs::path& data_dir) {
    std::size_t sessions = 0, issues = 0;
    for (const auto& log : session::EventStore::read_all(data_dir / "sessions")) {
        ++sessions;
        for (const auto& issue : analytics::lint_log(log)) {
            ++issues;
            std::cout << issue.session_id << " seq " << issue.seq << " " << issue.code << ": " << issue.message << "\n";
        }
    }
    std::cout << sessions << " sessions, " << issues << " issues\n";
    return issues == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tutoring script authoring, session service and log analytics"};
    app.require_subcommand(1);

    ProviderFlags author_pf;
    fs::path lesson, author_out, template_dir;
    std::size_t questions = 4;
    auto* author = app.add_subcommand("author", "generate a tutoring script from a lesson text");
    author->add_option("--lesson", lesson, "lesson file (.json or plain text)")->required()->check(CLI::ExistingFile);
    author->add_option("--questions", questions, "number of questions")->capture_default_str();
    author->add_option("--out", author_out, "script output file")->required();
    author->add_option("--template-dir", template_dir, "directory overriding prompt templates");
    add_provider_flags(author, author_pf);

    ProviderFlags serve_pf;
    fs::path data_dir;
    std::string listen = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "run the session HTTP API");
    serve->add_option("--data-dir", data_dir, "data directory")->required();
    serve->add_option("--listen", listen, "host:port (port 0 picks a free port)")->capture_default_str();
    serve->add_option("--template-dir", template_dir, "directory overriding prompt templates");
    add_provider_flags(serve, serve_pf);

    std::vector<fs::path> import_lessons, import_scripts;
    std::string origin = "teacher";
    fs::path test_a, test_b, survey;
    auto* import = app.add_subcommand("import", "add lessons, scripts and instruments to a data directory");
    import->add_option("--data-dir", data_dir, "data directory")->required();
    import->add_option("--lesson", import_lessons, "lesson file")->check(CLI::ExistingFile);
    import->add_option("--script", import_scripts, "script file")->check(CLI::ExistingFile);
    import->add_option("--origin", origin, "origin of the imported scripts")
        ->check(CLI::IsMember({"teacher", "generated"}))
        ->capture_default_str();
    import->add_option("--test-a", test_a, "test form A")->check(CLI::ExistingFile);
    import->add_option("--test-b", test_b, "test form B")->check(CLI::ExistingFile);
    import->add_option("--survey", survey, "survey instrument")->check(CLI::ExistingFile);

    fs::path records, report_out;
    bool table = false;
    analytics::ReportOptions report_options;
    auto* analyze = app.add_subcommand("analyze", "learning gains, usage patterns and correlations");
    analyze->add_option("--data-dir", data_dir, "data directory")->required();
    analyze->add_option("--records", records, "participant records (default: derived from the logs)")
        ->check(CLI::ExistingFile);
    analyze->add_option("--out", report_out, "report JSON output")->required();
    analyze->add_flag("--table", table, "print aligned tables");
    analyze->add_option("--help-ratio", report_options.thresholds.help_ratio)->capture_default_str();
    analyze->add_option("--scroll-min", report_options.thresholds.scroll_min)->capture_default_str();
    analyze->add_option("--threads", report_options.threads)->capture_default_str();

    fs::path export_out;
    auto* export_cmd = app.add_subcommand("export-records", "derive participant records from the session logs");
    export_cmd->add_option("--data-dir", data_dir, "data directory")->required();
    export_cmd->add_option("--out", export_out, "records output file")->required();

    auto* lint = app.add_subcommand("lint", "check every session log for sequence and condition violations");
    lint->add_option("--data-dir", data_dir, "data directory")->required();

    std::string session_id;
    auto* replay = app.add_subcommand("replay", "rebuild a session state from its log");
    replay->add_option("--data-dir", data_dir, "data directory")->required();
    replay->add_option("--session", session_id, "session id")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*author) return run_author(lesson, questions, author_out, template_dir, author_pf);
        if (*serve) return run_serve(data_dir, listen, template_dir, serve_pf);
        if (*import) return run_import(data_dir, import_lessons, import_scripts, origin, test_a, test_b, survey);
        if (*analyze) return run_analyze(data_dir, records, report_out, table, report_options);
        if (*export_cmd) {
            auto recs = records_from_logs(data_dir / "sessions");
            session::save_records(recs, export_out);
            std::cout << "wrote " << recs.size() << " records to " << export_out.string() << "\n";
            return 0;
        }
        if (*lint) return run_lint(data_dir);
        if (*replay) {
            session::EventStore store(data_dir / "sessions");
            std::cout << session::to_json(session::replay_log(store.load(session_id)).state).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
