#pragma once

#include <stdexcept>
#include <string>

namespace pairforge {

/// Root of every error raised by the library. Callers that only need to
/// report a failure catch this; the pipeline dispatches on the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (dataset lines, checkpoint files, replay logs).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A record or structure violates one of its documented invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's contract (e.g. rewarding a base pair).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Results that cannot both be true: token-count mismatches, wrong
/// embedding dimensions.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Gateway errors. Only TransportError is retryable.

class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Network failure, HTTP 5xx or 429. Retried with backoff; raised once the
/// retry budget is exhausted.
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// HTTP 4xx (other than 429). Never retried.
class PermanentError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// The backend answered but the payload is unusable (empty completion,
/// missing fields).
class ContentError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// The backend cannot perform the requested operation at all.
class CapabilityError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

}  // namespace pairforge
