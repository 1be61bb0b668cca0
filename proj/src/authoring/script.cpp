#include "trialogue/authoring/script.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/text.hpp"

namespace trialogue::authoring {

using nlohmann::json;

std::size_t LessonText::word_count() const { return text::word_count(body); }

void LessonText::validate() const {
    if (lesson_id.empty()) throw PreconditionError("lesson has no id");
    if (text::trim(body).empty()) throw PreconditionError("lesson " + lesson_id + " has an empty body");
}

LessonText LessonText::from_file(const std::filesystem::path& path) {
    auto contents = io::read_file(path);
    LessonText lesson;
    if (path.extension() == ".json") {
        try {
            auto j = json::parse(contents);
            lesson.lesson_id = j.at("lesson_id").get<std::string>();
            lesson.title = j.value("title", lesson.lesson_id);
            lesson.body = j.at("body").get<std::string>();
        } catch (const json::exception& e) {
            throw SchemaError("lesson file " + path.string() + ": " + e.what());
        }
    } else {
        lesson.lesson_id = path.stem().string();
        lesson.title = lesson.lesson_id;
        lesson.body = std::move(contents);
    }
    lesson.validate();
    return lesson;
}

std::size_t TutoringScript::expectation_count() const {
    std::size_t n = 0;
    for (const auto& q : questions) n += q.expectations.size();
    return n;
}

const Question* TutoringScript::find_question(std::string_view question_id) const {
    for (const auto& q : questions)
        if (q.question_id == question_id) return &q;
    return nullptr;
}

const Expectation* TutoringScript::find_expectation(std::string_view expectation_id) const {
    for (const auto& q : questions)
        for (const auto& e : q.expectations)
            if (e.expectation_id == expectation_id) return &e;
    return nullptr;
}

std::vector<Violation> check_structure(const TutoringScript& script) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string subject, std::string message) {
        out.push_back({std::move(code), std::move(subject), std::move(message)});
    };

    if (script.schema_version != kSchemaVersion)
        add("schema_version", "", "unsupported schema_version " + std::to_string(script.schema_version));
    if (script.script_id.empty()) add("missing_id", "", "script_id is empty");
    if (script.lesson_id.empty()) add("missing_id", "", "lesson_id is empty");
    if (script.questions.empty()) add("no_questions", "", "script has no questions");

    std::set<std::string> ids;
    auto claim = [&](const std::string& id, std::string_view what) {
        if (id.empty()) {
            add("missing_id", "", std::string(what) + " without id");
        } else if (!ids.insert(id).second) {
            add("duplicate_id", id, "id '" + id + "' is used more than once");
        }
    };

    for (const auto& q : script.questions) {
        claim(q.question_id, "question");
        if (text::trim(q.text).empty()) add("empty_text", q.question_id, "question text is empty");
        if (text::trim(q.solution_text).empty())
            add("empty_solution", q.question_id, "solution text is empty");
        if (q.expectations.empty())
            add("no_expectations", q.question_id, "question has no expectations");
        for (const auto& e : q.expectations) {
            claim(e.expectation_id, "expectation");
            if (e.question_id != q.question_id)
                add("dangling_reference", e.expectation_id,
                    "expectation refers to question '" + e.question_id + "'");
            if (text::trim(e.text).empty()) add("empty_text", e.expectation_id, "expectation text is empty");
        }
    }
    return out;
}

std::vector<Violation> validate_script(const TutoringScript& script, const ExpectationBounds& bounds) {
    auto out = check_structure(script);
    for (const auto& q : script.questions) {
        const auto n = q.expectations.size();
        if (n == 0) continue;  // already reported as no_expectations
        if (n < bounds.min_per_question || n > bounds.max_per_question) {
            out.push_back({"expectation_count", q.question_id,
                           "question has " + std::to_string(n) + " expectations, expected " +
                               std::to_string(bounds.min_per_question) + ".." +
                               std::to_string(bounds.max_per_question)});
        }
    }
    return out;
}

std::string serialize_script(const TutoringScript& script) {
    json questions = json::array();
    for (const auto& q : script.questions) {
        json expectations = json::array();
        for (const auto& e : q.expectations)
            expectations.push_back({{"expectation_id", e.expectation_id}, {"text", e.text}});
        questions.push_back({{"expectations", std::move(expectations)},
                             {"question_id", q.question_id},
                             {"solution_text", q.solution_text},
                             {"text", q.text}});
    }
    json doc = {{"lesson_id", script.lesson_id},
                {"questions", std::move(questions)},
                {"schema_version", script.schema_version},
                {"script_id", script.script_id}};
    try {
        return doc.dump(2) + "\n";
    } catch (const json::type_error& e) {
        throw SchemaError(std::string("script is not valid UTF-8: ") + e.what());
    }
}

namespace {

void require_exact_keys(const json& obj, std::initializer_list<std::string_view> keys, std::string_view where) {
    if (!obj.is_object()) throw SchemaError(std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (auto k : keys) known = known || key == k;
        if (!known) throw SchemaError("unknown field '" + key + "' in " + std::string(where));
    }
    for (auto k : keys)
        if (!obj.contains(k)) throw SchemaError("missing field '" + std::string(k) + "' in " + std::string(where));
}

std::string get_string(const json& obj, const char* key, std::string_view where) {
    const auto& v = obj.at(key);
    if (!v.is_string()) throw SchemaError("field '" + std::string(key) + "' in " + std::string(where) + " must be a string");
    return v.get<std::string>();
}

}  // namespace

TutoringScript parse_script(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("script is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("script must be a JSON object");
    if (!doc.contains("schema_version")) throw SchemaError("missing field 'schema_version'");
    if (!doc["schema_version"].is_number_integer()) throw SchemaError("schema_version must be an integer");
    const int version = doc["schema_version"].get<int>();
    if (version != kSchemaVersion)
        throw VersionError("unsupported schema_version " + std::to_string(version));
    require_exact_keys(doc, {"schema_version", "script_id", "lesson_id", "questions"}, "script");

    TutoringScript script;
    script.schema_version = version;
    script.script_id = get_string(doc, "script_id", "script");
    script.lesson_id = get_string(doc, "lesson_id", "script");
    if (!doc["questions"].is_array()) throw SchemaError("questions must be an array");
    for (const auto& jq : doc["questions"]) {
        require_exact_keys(jq, {"question_id", "text", "solution_text", "expectations"}, "question");
        Question q;
        q.question_id = get_string(jq, "question_id", "question");
        q.text = get_string(jq, "text", "question");
        q.solution_text = get_string(jq, "solution_text", "question");
        if (!jq["expectations"].is_array()) throw SchemaError("expectations must be an array");
        for (const auto& je : jq["expectations"]) {
            require_exact_keys(je, {"expectation_id", "text"}, "expectation");
            q.expectations.push_back(
                {get_string(je, "expectation_id", "expectation"), q.question_id, get_string(je, "text", "expectation")});
        }
        script.questions.push_back(std::move(q));
    }
    return script;
}

TutoringScript load_script(const std::filesystem::path& path) { return parse_script(io::read_file(path)); }

void save_script(const TutoringScript& script, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize_script(script));
}

}  // namespace trialogue::authoring
