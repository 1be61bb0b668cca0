#pragma once

#include <string>
#include <vector>

#include "trialogue/authoring/script.hpp"
#include "trialogue/orchestration/state.hpp"
#include "trialogue/session/event.hpp"
#include "trialogue/session/instruments.hpp"

namespace trialogue::session {

struct ReplayResult {
    orchestration::SessionState state;
    authoring::TutoringScript script;
    std::string lesson_id;
    std::string participant_id;
};

// Structural log checks: starts with session_created at seq 1, seq strictly
// +1 per event, one session id, nothing but tests and surveys after
// session_completed. Throws CorruptLog.
void check_log_sequence(const std::vector<SessionEvent>& events);

// Folds a session log through the orchestration effects. The script the
// session ran against is embedded in its session_created event, so replay
// needs neither the registry nor a provider. Throws CorruptLog on any
// sequence or state-invariant violation.
ReplayResult replay_log(const std::vector<SessionEvent>& events);

// Participant outcome as recorded in a log: test scores (automatic plus
// manual free-form points), survey ratings and the data-quality flags.
ParticipantRecord derive_record(const std::vector<SessionEvent>& events);

}  // namespace trialogue::session
