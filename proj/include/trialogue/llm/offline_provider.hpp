#pragma once

#include "trialogue/llm/completion.hpp"

namespace trialogue::llm {

// Provider that needs no network: it recognizes the "Task:" line of the
// bundled templates and answers with keyword heuristics over the material
// inside the prompt. Good enough to demo the service end to end; not a
// substitute for a model.
//
//   generate_questions    one question per leading lesson sentence
//   generate_solution     the lesson sentences closest to the question
//   generate_expectations the solution's sentences (or clauses)
//   judge_coverage        covered when keyword overlap >= 0.5, never a misconception
//   qa_judge              correct when keyword overlap >= 0.5
//   ruffle / riley        canned text per move
class OfflineProvider : public CompletionProvider {
public:
    CompletionResult complete(const CompletionRequest& request) override;
};

}  // namespace trialogue::llm
