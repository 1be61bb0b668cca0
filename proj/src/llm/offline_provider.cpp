#include "trialogue/llm/offline_provider.hpp"

#include <algorithm>
#include <regex>

#include "trialogue/errors.hpp"
#include "trialogue/text.hpp"

namespace trialogue::llm {

namespace {

constexpr double kCoveredOverlap = 0.5;

std::string tagged(const std::string& prompt, const std::string& tag) {
    const auto open = "<" + tag + ">";
    const auto close = "</" + tag + ">";
    auto b = prompt.find(open);
    if (b == std::string::npos) return {};
    b += open.size();
    auto e = prompt.find(close, b);
    if (e == std::string::npos) return {};
    return std::string(text::trim(std::string_view(prompt).substr(b, e - b)));
}

std::string line_value(const std::string& prompt, const std::string& key) {
    std::smatch m;
    if (std::regex_search(prompt, m, std::regex(key + ":[ \\t]*([^\\n]*)"))) return std::string(text::trim(m[1].str()));
    return {};
}

std::vector<std::string> sentences(std::string_view body) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        current += c == '\n' ? ' ' : c;
        const bool end = (c == '.' || c == '?' || c == '!') && (i + 1 == body.size() || body[i + 1] == ' ' || body[i + 1] == '\n');
        if (end) {
            auto s = text::trim(current);
            if (text::word_count(s) >= 3) out.emplace_back(s);
            current.clear();
        }
    }
    if (auto s = text::trim(current); text::word_count(s) >= 3) out.emplace_back(s);
    return out;
}

std::string numbered(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += std::to_string(i + 1) + ". " + items[i] + "\n";
    return out;
}

std::string questions(const std::string& prompt) {
    std::smatch m;
    std::size_t count = 4;
    if (std::regex_search(prompt, m, std::regex("exactly (\\d+)"))) count = std::stoul(m[1].str());
    auto facts = sentences(tagged(prompt, "lesson"));
    if (facts.empty()) throw ProviderError(ProviderError::Kind::protocol, "offline provider: lesson has no sentences");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto s = facts[i % facts.size()];
        s.pop_back();
        out.push_back("Can you explain why " + text::to_lower(s.substr(0, 1)) + s.substr(1) + "?");
    }
    return numbered(out);
}

std::string solution(const std::string& prompt) {
    const auto question = tagged(prompt, "question");
    auto facts = sentences(tagged(prompt, "lesson"));
    if (facts.empty()) throw ProviderError(ProviderError::Kind::protocol, "offline provider: lesson has no sentences");
    std::stable_sort(facts.begin(), facts.end(), [&](const auto& a, const auto& b) {
        return text::keyword_overlap(a, question) > text::keyword_overlap(b, question);
    });
    facts.resize(std::min<std::size_t>(facts.size(), 2));
    return text::join(facts, " ");
}

std::string expectations(const std::string& prompt) {
    std::size_t lo = 2, hi = 5;
    std::smatch m;
    if (std::regex_search(prompt, m, std::regex("between (\\d+) and (\\d+)"))) {
        lo = std::stoul(m[1].str());
        hi = std::stoul(m[2].str());
    }
    auto parts = sentences(tagged(prompt, "solution"));
    if (parts.size() < lo) {
        std::vector<std::string> clauses;
        for (const auto& s : parts) {
            std::size_t start = 0;
            for (std::size_t p; (p = s.find(", ", start)) != std::string::npos; start = p + 2)
                clauses.push_back(s.substr(start, p - start));
            clauses.push_back(s.substr(start));
        }
        parts = std::move(clauses);
    }
    while (!parts.empty() && parts.size() < lo) parts.push_back(parts.back());
    if (parts.size() > hi) parts.resize(hi);
    return numbered(parts);
}

std::string judge(const std::string& prompt) {
    const auto message = tagged(prompt, "learner_message");
    std::string out;
    static const std::regex item("^- ([^:]+): (.*)$");
    const auto pending = tagged(prompt, "pending_expectations");
    for (auto line : text::split_lines(pending)) {
        std::smatch m;
        std::string l(line);
        if (!std::regex_match(l, m, item)) continue;
        const bool covered = text::keyword_overlap(message, m[2].str()) >= kCoveredOverlap;
        out += m[1].str() + (covered ? ": covered\n" : ": not covered\n");
    }
    return out + "misconception: no\n";
}

std::string qa_judge(const std::string& prompt) {
    const auto answer = tagged(prompt, "answer");
    return text::keyword_overlap(answer, tagged(prompt, "solution")) >= kCoveredOverlap ? "correct" : "incorrect";
}

std::string ruffle(const std::string& prompt) {
    const auto move = line_value(prompt, "Move");
    const auto question = line_value(prompt, "Current question");
    if (move == "ask_question") return "Great, I think I get it. Next one: " + question;
    if (move == "encourage") return "That makes a lot of sense, thank you!";
    if (move == "closing") return "Thank you for teaching me! I learned a lot today.";
    return "Interesting! Can you tell me a bit more about that?";
}

std::string riley(const std::string& prompt) {
    const auto move = line_value(prompt, "Move");
    if (move == "revision_request") return "Let's take another look at that part. Could you revise your answer?";
    const auto question = line_value(prompt, "Current question");
    auto facts = sentences(tagged(prompt, "lesson"));
    auto best = std::max_element(facts.begin(), facts.end(), [&](const auto& a, const auto& b) {
        return text::keyword_overlap(a, question) < text::keyword_overlap(b, question);
    });
    if (best == facts.end()) return "Have another look at the lesson text for this question.";
    return "Here is a hint from the lesson: " + *best;
}

}  // namespace

CompletionResult OfflineProvider::complete(const CompletionRequest& request) {
    request.validate();
    const auto all = request.concatenated_text();
    const auto task = line_value(all, "Task");

    CompletionResult out;
    if (task == "generate_questions") out.content = questions(all);
    else if (task == "generate_solution") out.content = solution(all);
    else if (task == "generate_expectations") out.content = expectations(all);
    else if (task == "judge_coverage") out.content = judge(all);
    else if (task == "qa_judge") out.content = qa_judge(all);
    else if (task == "ruffle") out.content = ruffle(all);
    else if (task == "riley") out.content = riley(all);
    else throw ProviderError(ProviderError::Kind::protocol, "offline provider: unrecognized task '" + task + "'");

    out.prompt_tokens = static_cast<std::uint64_t>(text::word_count(all));
    out.completion_tokens = static_cast<std::uint64_t>(text::word_count(out.content));
    return out;
}

}  // namespace trialogue::llm
