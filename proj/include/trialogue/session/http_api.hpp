#pragma once

#include <memory>
#include <string>

#include "trialogue/session/service.hpp"

namespace trialogue::session {

// JSON-over-HTTP front end for a SessionService.
//
//   POST /sessions                      {condition, script_id, lesson_id, participant_id}
//   GET  /sessions/{id}
//   POST /sessions/{id}/messages        {text, expected_seq?}
//   POST /sessions/{id}/help            {expected_seq?}
//   POST /sessions/{id}/events          {type: lesson_scrolled|session_completed, payload?, expected_seq?}
//   POST /sessions/{id}/test            {phase, responses}
//   POST /sessions/{id}/manual-scores   {phase, manual_scores}
//   POST /sessions/{id}/survey          {responses}
//   GET  /lessons/{id}
//   POST /scripts:generate              {lesson_id, question_count?}
//   GET  /scripts/{id}                  script JSON, origin in X-Script-Origin
//   PUT  /scripts/{id}?origin=teacher|generated
//
// Errors are {"error": <name>, "message": <text>} with 400 (bad input),
// 404 (unknown id), 409 (closed session or lost append race), 422
// (condition mismatch) or 502 (provider failure).
class HttpApi {
public:
    explicit HttpApi(SessionService& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    bool bind(const std::string& host, int port);
    int bind_to_any_port(const std::string& host);
    // Blocks until stop().
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace trialogue::session
