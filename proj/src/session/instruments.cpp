#include "trialogue/session/instruments.hpp"

#include <set>

#include "trialogue/errors.hpp"
#include "trialogue/io.hpp"
#include "trialogue/text.hpp"

namespace trialogue::session {

using nlohmann::json;

namespace {

ItemKind kind_from_string(const std::string& s) {
    if (s == "multiple_choice") return ItemKind::multiple_choice;
    if (s == "fill_blank") return ItemKind::fill_blank;
    if (s == "free_form") return ItemKind::free_form;
    throw SchemaError("unknown test item kind '" + s + "'");
}

std::string to_string(ItemKind k) {
    switch (k) {
        case ItemKind::multiple_choice: return "multiple_choice";
        case ItemKind::fill_blank: return "fill_blank";
        case ItemKind::free_form: return "free_form";
    }
    return "free_form";
}

std::string normalize_blank(std::string_view s) { return text::to_lower(text::trim(s)); }

}  // namespace

const TestItem* TestInstrument::find(const std::string& item_id) const {
    for (const auto& item : items)
        if (item.item_id == item_id) return &item;
    return nullptr;
}

void TestInstrument::validate() const {
    std::set<std::string> ids;
    for (const auto& item : items) {
        if (!ids.insert(item.item_id).second) throw SchemaError("duplicate test item " + item.item_id);
        if (item.kind == ItemKind::multiple_choice && (!item.key_index || *item.key_index >= item.options.size()))
            throw SchemaError("multiple-choice item " + item.item_id + " has a key outside its options");
        if (item.kind == ItemKind::fill_blank && item.accepted.empty())
            throw SchemaError("fill-in-the-blank item " + item.item_id + " has no accepted answers");
    }
}

TestInstrument TestInstrument::from_json(const json& j) {
    try {
        TestInstrument t;
        t.instrument_id = j.at("instrument_id").get<std::string>();
        for (const auto& ji : j.at("items")) {
            TestItem item;
            item.item_id = ji.at("item_id").get<std::string>();
            item.kind = kind_from_string(ji.at("kind").get<std::string>());
            item.prompt = ji.value("prompt", "");
            if (item.kind == ItemKind::multiple_choice) {
                item.options = ji.at("options").get<std::vector<std::string>>();
                item.key_index = ji.at("key").get<std::size_t>();
            } else if (item.kind == ItemKind::fill_blank) {
                item.accepted = ji.at("key").get<std::vector<std::string>>();
            }
            t.items.push_back(std::move(item));
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed test instrument: ") + e.what());
    }
}

json TestInstrument::to_json() const {
    json items_json = json::array();
    for (const auto& item : items) {
        json ji = {{"item_id", item.item_id}, {"kind", to_string(item.kind)}, {"prompt", item.prompt}};
        if (item.kind == ItemKind::multiple_choice) {
            ji["options"] = item.options;
            ji["key"] = *item.key_index;
        } else if (item.kind == ItemKind::fill_blank) {
            ji["key"] = item.accepted;
        }
        items_json.push_back(std::move(ji));
    }
    return {{"instrument_id", instrument_id}, {"items", std::move(items_json)}};
}

TestScore score_test(const TestInstrument& instrument, const json& responses) {
    if (!responses.is_object()) throw PreconditionError("test responses must map item ids to answers");
    for (const auto& [id, _] : responses.items())
        if (instrument.find(id) == nullptr) throw UnknownItem("instrument " + instrument.instrument_id + " has no item " + id);

    TestScore score;
    for (const auto& item : instrument.items) {
        if (item.kind == ItemKind::free_form) {
            score.pending_manual.push_back(item.item_id);
            continue;
        }
        double points = 0.0;
        auto it = responses.find(item.item_id);
        if (it != responses.end() && !it->is_null()) {
            if (item.kind == ItemKind::multiple_choice) {
                if (it->is_number_integer() && it->get<long long>() >= 0 &&
                    static_cast<std::size_t>(it->get<long long>()) == *item.key_index)
                    points = 1.0;
            } else if (it->is_string()) {
                const auto answer = normalize_blank(it->get<std::string>());
                for (const auto& accepted : item.accepted)
                    if (normalize_blank(accepted) == answer) points = 1.0;
            }
        }
        score.item_points[item.item_id] = points;
        score.auto_score += points;
    }
    return score;
}

void SurveyInstrument::validate() const {
    std::set<std::string> ids;
    int lookups = 0;
    for (const auto& item : items) {
        if (!ids.insert(item.item_id).second) throw SchemaError("duplicate survey item " + item.item_id);
        if (item.attention_expected &&
            (*item.attention_expected < kScaleMin || *item.attention_expected > kScaleMax))
            throw SchemaError("attention check " + item.item_id + " expects a value outside 1..7");
        lookups += item.lookup ? 1 : 0;
    }
    if (lookups > 1) throw SchemaError("survey has more than one lookup item");
}

SurveyInstrument SurveyInstrument::from_json(const json& j) {
    try {
        SurveyInstrument s;
        s.instrument_id = j.at("instrument_id").get<std::string>();
        for (const auto& ji : j.at("items")) {
            SurveyItem item;
            item.item_id = ji.at("item_id").get<std::string>();
            item.prompt = ji.value("prompt", "");
            item.construct = ji.value("construct", "");
            if (ji.contains("attention_expected")) item.attention_expected = ji["attention_expected"].get<int>();
            item.lookup = ji.value("lookup", false);
            s.items.push_back(std::move(item));
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed survey instrument: ") + e.what());
    }
}

json SurveyInstrument::to_json() const {
    json items_json = json::array();
    for (const auto& item : items) {
        json ji = {{"item_id", item.item_id}, {"prompt", item.prompt}, {"construct", item.construct}};
        if (item.attention_expected) ji["attention_expected"] = *item.attention_expected;
        if (item.lookup) ji["lookup"] = true;
        items_json.push_back(std::move(ji));
    }
    return {{"instrument_id", instrument_id}, {"items", std::move(items_json)}};
}

SurveyOutcome evaluate_survey(const SurveyInstrument& survey, const json& responses) {
    if (!responses.is_object()) throw PreconditionError("survey responses must map item ids to ratings");
    SurveyOutcome out;
    for (const auto& [id, value] : responses.items()) {
        bool known = false;
        for (const auto& item : survey.items) known = known || item.item_id == id;
        if (!known) throw UnknownItem("survey has no item " + id);
        if (!value.is_number_integer()) throw PreconditionError("survey rating for " + id + " must be an integer");
        const int v = value.get<int>();
        if (v < SurveyInstrument::kScaleMin || v > SurveyInstrument::kScaleMax)
            throw PreconditionError("survey rating for " + id + " is outside 1..7");
        out.responses[id] = v;
    }
    out.attention_pass = true;
    bool has_lookup = false;
    for (const auto& item : survey.items) {
        auto it = out.responses.find(item.item_id);
        if (item.attention_expected)
            out.attention_pass = out.attention_pass && it != out.responses.end() && it->second == *item.attention_expected;
        if (item.lookup) {
            has_lookup = true;
            out.lookup_denied = it != out.responses.end() && it->second == SurveyInstrument::kScaleMin;
        }
    }
    if (!has_lookup) out.lookup_denied = false;
    return out;
}

json ParticipantRecord::to_json() const {
    json j = {{"participant_id", participant_id},
              {"session_id", session_id},
              {"condition", orchestration::to_string(condition)},
              {"max_score", max_score},
              {"survey", survey},
              {"attention_pass", attention_pass},
              {"lookup_denied", lookup_denied}};
    j["pre_test_score"] = pre_test_score ? json(*pre_test_score) : json(nullptr);
    j["post_test_score"] = post_test_score ? json(*post_test_score) : json(nullptr);
    return j;
}

ParticipantRecord ParticipantRecord::from_json(const json& j) {
    try {
        ParticipantRecord r;
        r.participant_id = j.at("participant_id").get<std::string>();
        r.session_id = j.value("session_id", "");
        r.condition = orchestration::condition_from_string(j.at("condition").get<std::string>());
        if (j.contains("pre_test_score") && !j["pre_test_score"].is_null())
            r.pre_test_score = j["pre_test_score"].get<double>();
        if (j.contains("post_test_score") && !j["post_test_score"].is_null())
            r.post_test_score = j["post_test_score"].get<double>();
        r.max_score = j.value("max_score", 6.0);
        if (j.contains("survey")) r.survey = j["survey"].get<std::map<std::string, int>>();
        r.attention_pass = j.value("attention_pass", false);
        r.lookup_denied = j.value("lookup_denied", false);
        for (auto score : {r.pre_test_score, r.post_test_score})
            if (score && (*score < 0.0 || *score > r.max_score))
                throw SchemaError("participant " + r.participant_id + " has a score outside [0, max_score]");
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed participant record: ") + e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(e.what());
    }
}

std::vector<ParticipantRecord> load_records(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError("records file " + path.string() + ": " + e.what());
    }
    const json& list = doc.is_object() && doc.contains("records") ? doc["records"] : doc;
    if (!list.is_array()) throw SchemaError("records file must hold an array of participant records");
    std::vector<ParticipantRecord> out;
    for (const auto& j : list) out.push_back(ParticipantRecord::from_json(j));
    return out;
}

void save_records(const std::vector<ParticipantRecord>& records, const std::filesystem::path& path) {
    json list = json::array();
    for (const auto& r : records) list.push_back(r.to_json());
    io::write_file_atomic(path, json{{"records", std::move(list)}}.dump(2) + "\n");
}

}  // namespace trialogue::session
