#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "testkit.hpp"
#include "trialogue/authoring/pipeline.hpp"
#include "trialogue/authoring/script.hpp"
#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/llm/scripted_provider.hpp"

using namespace trialogue;
using namespace trialogue::authoring;
using llm::ScriptedProvider;

namespace {

LessonText tiny_lesson() { return {"cells", "Cells", "Organelles have shapes that fit their jobs."}; }

bool has_code(const std::vector<Violation>& vs, const std::string& code, const std::string& subject = "") {
    for (const auto& v : vs)
        if (v.code == code && (subject.empty() || v.subject == subject)) return true;
    return false;
}

}  // namespace

TEST_CASE("lesson text") {
    LessonText l{"l1", "T", "  one two\tthree\nfour "};
    CHECK(l.word_count() == 4);
    CHECK_NOTHROW(l.validate());
    LessonText blank{"l1", "T", " \n "};
    CHECK_THROWS_AS(blank.validate(), PreconditionError);

    testkit::TempDir dir;
    io::write_file_atomic(dir.path() / "plants.txt", "Leaves capture light.");
    auto plain = LessonText::from_file(dir.path() / "plants.txt");
    CHECK(plain.lesson_id == "plants");
    CHECK(plain.body == "Leaves capture light.");
    CHECK(testkit::load_fixture_lesson().lesson_id == "cells");
}

TEST_CASE("parse_enumerated_list") {
    CHECK(parse_enumerated_list("1. A\n2. B\n3) C\n") == std::vector<std::string>{"A", "B", "C"});
    CHECK(parse_enumerated_list("Here you go:\n1. A\n2. B") == std::vector<std::string>{"A", "B"});
    CHECK(parse_enumerated_list("- A\n* B") == std::vector<std::string>{"A", "B"});
    CHECK(parse_enumerated_list("A\n\nB\n") == std::vector<std::string>{"A", "B"});
    CHECK(parse_enumerated_list("1. First part\n   continues here\n2. Second") ==
          std::vector<std::string>{"First part continues here", "Second"});
    CHECK(parse_enumerated_list("").empty());
}

TEST_CASE("generate_questions") {
    AuthoringConfig config;
    SUBCASE("four enumerated lines give four questions in order") {
        ScriptedProvider p({ScriptedProvider::Entry{"Task: generate_questions", "1. Q one?\n2. Q two?\n3. Q three?\n4. Q four?"}});
        CHECK(generate_questions(tiny_lesson(), config, p) ==
              std::vector<std::string>{"Q one?", "Q two?", "Q three?", "Q four?"});
        REQUIRE(p.requests().size() == 1);
        CHECK(p.requests()[0].concatenated_text().find("exactly 4") != std::string::npos);
    }
    SUBCASE("a wrong count triggers one re-prompt") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. A\n2. B\n3. C"}, {"previous answer", "1. A\n2. B\n3. C\n4. D"}});
        CHECK(generate_questions(tiny_lesson(), config, p).size() == 4);
        CHECK(p.requests()[1].messages.back().role == llm::Role::user);
    }
    SUBCASE("three items twice is a ParseError") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. A\n2. B\n3. C"}, {"*", "1. A\n2. B\n3. C"}});
        CHECK_THROWS_AS(generate_questions(tiny_lesson(), config, p), ParseError);
    }
    SUBCASE("provider errors propagate") {
        ScriptedProvider p;
        CHECK_THROWS_AS(generate_questions(tiny_lesson(), config, p), ProviderError);
    }
}

TEST_CASE("generate_solution") {
    AuthoringConfig config;
    SUBCASE("keyed on the question, returned verbatim") {
        ScriptedProvider p({ScriptedProvider::Entry{"ribosomes", "Ribosomes build proteins."}, {"nucleus", "The nucleus stores DNA."}},
                           ScriptedProvider::Mode::keyed);
        CHECK(generate_solution("What does the nucleus do?", tiny_lesson(), config, p) == "The nucleus stores DNA.");
    }
    SUBCASE("empty question is a precondition violation") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "x"}});
        CHECK_THROWS_AS(generate_solution("  ", tiny_lesson(), config, p), PreconditionError);
    }
    SUBCASE("blank reply") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "   "}});
        CHECK_THROWS_AS(generate_solution("Q?", tiny_lesson(), config, p), EmptyResponse);
    }
    SUBCASE("form follows function solution contains both facts") {
        const auto fixture = testkit::load_fixture_script("form_function_script.json");
        const auto& q = fixture.questions[0];
        ScriptedProvider p({ScriptedProvider::Entry{"form follows function", q.expectations[0].text + " " + q.expectations[1].text}});
        auto solution = generate_solution(q.text, testkit::load_fixture_lesson(), config, p);
        CHECK(solution.find(q.expectations[0].text) != std::string::npos);
        CHECK(solution.find(q.expectations[1].text) != std::string::npos);
    }
}

TEST_CASE("generate_expectations") {
    AuthoringConfig config;
    SUBCASE("two facts") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. Fact 1.1 text\n2. Fact 1.2 text"}});
        CHECK(generate_expectations("Q?", "S.", config, p) == std::vector<std::string>{"Fact 1.1 text", "Fact 1.2 text"});
    }
    SUBCASE("three items keep their order") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. c\n2. a\n3. b"}});
        CHECK(generate_expectations("Q?", "S.", config, p) == std::vector<std::string>{"c", "a", "b"});
    }
    SUBCASE("one item with min 2 fails after the re-prompt") {
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. only"}, {"*", "1. still only"}});
        CHECK_THROWS_AS(generate_expectations("Q?", "S.", config, p), ParseError);
    }
    SUBCASE("more than max is rejected too") {
        config.bounds.max_per_question = 2;
        ScriptedProvider p({ScriptedProvider::Entry{"*", "1. a\n2. b\n3. c"}, {"*", "1. a\n2. b"}});
        CHECK(generate_expectations("Q?", "S.", config, p).size() == 2);
    }
    SUBCASE("empty inputs") {
        ScriptedProvider p;
        CHECK_THROWS_AS(generate_expectations("", "S.", config, p), PreconditionError);
        CHECK_THROWS_AS(generate_expectations("Q?", "", config, p), PreconditionError);
    }
}

TEST_CASE("compile_script") {
    const auto lesson = tiny_lesson();
    SUBCASE("one question with two facts") {
        auto s = compile_script(lesson, {{"What does form follows function mean?", "Structure supports function."}},
                                {{"Fact one.", "Fact two."}});
        CHECK(s.script_id == "cells-script");
        CHECK(s.lesson_id == "cells");
        REQUIRE(s.questions.size() == 1);
        CHECK(s.questions[0].question_id == "q1");
        REQUIRE(s.questions[0].expectations.size() == 2);
        CHECK(s.questions[0].expectations[0].expectation_id == "q1e1");
        CHECK(s.questions[0].expectations[1].expectation_id == "q1e2");
        CHECK(s.questions[0].expectations[1].question_id == "q1");
        CHECK(validate_script(s, {}).empty());
    }
    SUBCASE("four by three gives twelve") {
        std::vector<QuestionDraft> qs;
        std::vector<std::vector<std::string>> es;
        for (int i = 1; i <= 4; ++i) {
            qs.push_back({"Q" + std::to_string(i), "S" + std::to_string(i)});
            es.push_back({"a" + std::to_string(i), "b" + std::to_string(i), "c" + std::to_string(i)});
        }
        auto s = compile_script(lesson, qs, es);
        CHECK(s.expectation_count() == 12);
        CHECK(s.questions[3].expectations[2].expectation_id == "q4e3");
        CHECK(s.questions[2].expectations[0].text == "a3");
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(compile_script(lesson, {}, {}), EmptyScript);
        CHECK_THROWS_AS(compile_script(lesson, {{"Q", "S"}}, {{}}), MissingExpectations);
        CHECK_THROWS_AS(compile_script(lesson, {{"Q", "S"}}, {{"a"}, {"b"}}), PreconditionError);
        CHECK_THROWS_AS(compile_script(lesson, {{"", "S"}}, {{"a"}}), PreconditionError);
    }
}

TEST_CASE("validate_script") {
    auto s = testkit::load_fixture_script("cells_script.json");
    CHECK(validate_script(s, {}).empty());

    SUBCASE("duplicate expectation id is named once") {
        s.questions[1].expectations[0].expectation_id = "q1e1";
        s.questions[1].expectations[0].question_id = "q2";
        auto v = check_structure(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].code == "duplicate_id");
        CHECK(v[0].subject == "q1e1");
    }
    SUBCASE("a question without expectations is one violation") {
        s.questions[2].expectations.clear();
        auto v = validate_script(s, {});
        REQUIRE(v.size() == 1);
        CHECK(v[0].code == "no_expectations");
    }
    SUBCASE("counts outside the bounds") {
        CHECK(has_code(validate_script(s, {4, 5}), "expectation_count", "q1"));
        CHECK(check_structure(s).empty());
    }
    SUBCASE("structural problems") {
        auto t = s;
        t.questions.clear();
        CHECK(has_code(check_structure(t), "no_questions"));
        t = s;
        t.questions[0].solution_text = " ";
        CHECK(has_code(check_structure(t), "empty_solution", "q1"));
        t = s;
        t.questions[0].expectations[0].question_id = "q9";
        CHECK(has_code(check_structure(t), "dangling_reference"));
        t = s;
        t.schema_version = 2;
        CHECK(has_code(check_structure(t), "schema_version"));
    }
}

TEST_CASE("script serialization") {
    const auto fixture = testkit::load_fixture_script("form_function_script.json");
    CHECK(fixture.questions[0].expectations[0].question_id == "q1");

    SUBCASE("round trip and canonical bytes") {
        const auto bytes = serialize_script(fixture);
        CHECK(parse_script(bytes) == fixture);
        CHECK(serialize_script(parse_script(bytes)) == bytes);
        CHECK(bytes == io::read_file(testkit::fixture("form_function_script.json")));
    }
    SUBCASE("schema errors") {
        CHECK_THROWS_AS(parse_script(R"({"script_id": "s", "lesson_id": "l", "questions": []})"), SchemaError);
        CHECK_THROWS_AS(parse_script(R"({"schema_version": 2, "script_id": "s", "lesson_id": "l", "questions": []})"),
                        VersionError);
        auto j = nlohmann::json::parse(serialize_script(fixture));
        j["origin"] = "teacher";
        CHECK_THROWS_AS(parse_script(j.dump()), SchemaError);
        j.erase("origin");
        j["questions"][0]["hint"] = "x";
        CHECK_THROWS_AS(parse_script(j.dump()), SchemaError);
        j["questions"][0].erase("hint");
        j["questions"][0]["expectations"][0].erase("text");
        CHECK_THROWS_AS(parse_script(j.dump()), SchemaError);
        CHECK_THROWS_AS(parse_script("{not json"), SchemaError);
    }
    SUBCASE("randomized round trips") {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 200; ++i) {
            auto s = testkit::random_script(rng);
            REQUIRE(check_structure(s).empty());
            const auto first = serialize_script(s);
            const auto parsed = parse_script(first);
            CHECK(parsed == s);
            CHECK(serialize_script(parsed) == first);
        }
    }
}

TEST_CASE("author_script end to end with a scripted provider") {
    auto run = [] {
        ScriptedProvider p({ScriptedProvider::Entry{"Task: generate_questions", "1. Why A?\n2. Why B?"},
                            {"Why A?", "Because A."},
                            {"Because A.", "1. A one\n2. A two"},
                            {"Why B?", "Because B."},
                            {"Because B.", "1. B one\n2. B two\n3. B three"}});
        AuthoringConfig config;
        config.target_question_count = 2;
        return author_script(tiny_lesson(), config, p);
    };
    const auto s = run();
    CHECK(s.questions.size() == 2);
    CHECK(s.expectation_count() == 5);
    CHECK(s.questions[1].solution_text == "Because B.");
    CHECK(serialize_script(s) == serialize_script(run()));
}

TEST_CASE("authoring config validation") {
    AuthoringConfig c;
    CHECK_NOTHROW(c.validate());
    c.bounds = {6, 5};
    CHECK_THROWS_AS(c.validate(), PreconditionError);
    c = {};
    c.templates.set("solution", "[user]\nAnswer {question}");
    CHECK_THROWS_AS(c.validate(), PreconditionError);
    c = {};
    c.target_question_count = 0;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
}
