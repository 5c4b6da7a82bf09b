#pragma once

#include <stdexcept>
#include <string>

namespace rwg {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input and configuration problems.
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Domain rule violations.
struct UnknownNodeError : Error { using Error::Error; };
struct DuplicateReadError : Error { using Error::Error; };
struct InvariantViolationError : Error { using Error::Error; };

// Backend failures. Timeout/RateLimited are transient (retried before
// surfacing); Auth and script errors are not.
struct BackendError : Error { using Error::Error; };
struct TimeoutError : BackendError { using BackendError::BackendError; };
struct AuthError : BackendError { using BackendError::BackendError; };
struct RateLimitedError : BackendError { using BackendError::BackendError; };
struct ScriptExhaustedError : BackendError { using BackendError::BackendError; };
struct MatcherMismatchError : BackendError { using BackendError::BackendError; };

// Evaluation.
struct UnparseableScoreError : Error { using Error::Error; };
struct EmptyCorpusError : Error { using Error::Error; };
struct MismatchedCorporaError : Error { using Error::Error; };

}  // namespace rwg
