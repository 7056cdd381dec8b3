#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace microflow {

enum class ErrorCode {
  BadRequest,
  BadSchema,
  Unauthorized,
  NotFound,
  UnknownWorker,
  // project creation
  EmptyProject,
  DuplicateEndpoint,
  // submission routing
  NotAssignee,
  KindMismatch,
  StaleMicrotask,
  AlreadyAssigned,
  // workflow rules
  DuplicateBehavior,
  NoBehaviors,
  AlreadyDeclared,
  ArityMismatch,
  EmptyAssertions,
  UnknownPseudoCallType,
  DuplicateFunctionName,
  NoOpenFailure,
  UnknownBehavior,
  FunctionComplete,
  // conflicts
  UnresolvedContradiction,
  UnknownConflict,
  AlreadyTicketed,
  // harness
  RunnerUnavailable,
  ProtocolViolation,
  // storage
  CorruptLog,
  StorageFull,
  // model
  UnknownState,
  TransitionViolation,
  // deployer
  NotComplete,
  UnknownEndpoint,
  HashMismatch,
  UnsupportedKind,
  // simulator
  InvalidScenario,
  ServiceUnreachable,
};

std::string_view error_name(ErrorCode code);

/// HTTP status the wire boundary reports for a code.
int http_status(ErrorCode code);

class DomainError : public std::runtime_error {
 public:
  DomainError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  explicit DomainError(ErrorCode code)
      : DomainError(code, std::string(error_name(code))) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw DomainError(code, message);
}

}  // namespace microflow
