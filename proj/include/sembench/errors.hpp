#pragma once

#include <stdexcept>
#include <string>

namespace sembench {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad inputs: malformed files, broken invariants, violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Remote endpoint trouble: transport failures, bad HTTP status, contract
// violations such as wrong embedding dimensions.
class EndpointError : public Error {
public:
    using Error::Error;
};

// Credentials rejected by an endpoint. Kept separate from generic endpoint
// failures so callers can tell a bad token from a flaky server.
class AuthError : public EndpointError {
public:
    using EndpointError::EndpointError;
};

// An LLM kept producing output that violates generation invariants after
// all retries were spent.
class GenerationError : public Error {
public:
    using Error::Error;
};

} // namespace sembench
