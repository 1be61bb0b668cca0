#pragma once

#include <stdexcept>
#include <string>

namespace trialogue {

// Root of every error the library throws. Each subclass corresponds to one
// named failure of a public operation so callers (and the HTTP layer) can
// map them to responses without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TRIALOGUE_DEFINE_ERROR(Name)          \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

// Input violated a documented precondition.
TRIALOGUE_DEFINE_ERROR(PreconditionError);

// llm
class ProviderError : public Error {
public:
    enum class Kind { timeout, transport, protocol };

    ProviderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }
    bool transient() const noexcept { return kind_ != Kind::protocol; }

private:
    Kind kind_;
};
TRIALOGUE_DEFINE_ERROR(AuthError);
TRIALOGUE_DEFINE_ERROR(ParseError);
TRIALOGUE_DEFINE_ERROR(EmptyResponse);

class MissingBinding : public Error {
public:
    explicit MissingBinding(std::string name)
        : Error("missing binding for placeholder {" + name + "}"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// authoring
TRIALOGUE_DEFINE_ERROR(EmptyScript);
TRIALOGUE_DEFINE_ERROR(MissingExpectations);
TRIALOGUE_DEFINE_ERROR(SchemaError);
TRIALOGUE_DEFINE_ERROR(VersionError);

// orchestration
TRIALOGUE_DEFINE_ERROR(InvalidScript);
TRIALOGUE_DEFINE_ERROR(SessionClosed);
TRIALOGUE_DEFINE_ERROR(ConditionMismatch);
TRIALOGUE_DEFINE_ERROR(CoverageIncomplete);

// session
TRIALOGUE_DEFINE_ERROR(UnknownScript);
TRIALOGUE_DEFINE_ERROR(UnknownLesson);
TRIALOGUE_DEFINE_ERROR(UnknownSession);
TRIALOGUE_DEFINE_ERROR(ConditionScriptMismatch);
TRIALOGUE_DEFINE_ERROR(SequenceConflict);
TRIALOGUE_DEFINE_ERROR(CorruptLog);
TRIALOGUE_DEFINE_ERROR(UnknownItem);

// analytics
TRIALOGUE_DEFINE_ERROR(ScoreOutOfRange);
TRIALOGUE_DEFINE_ERROR(InsufficientData);
TRIALOGUE_DEFINE_ERROR(ConstantInput);
TRIALOGUE_DEFINE_ERROR(LengthMismatch);
TRIALOGUE_DEFINE_ERROR(EmptyCohort);

#undef TRIALOGUE_DEFINE_ERROR

}  // namespace trialogue
