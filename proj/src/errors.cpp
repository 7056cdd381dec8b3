#include "microflow/errors.hpp"

namespace microflow {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::BadSchema: return "BadSchema";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnknownWorker: return "UnknownWorker";
    case ErrorCode::EmptyProject: return "EmptyProject";
    case ErrorCode::DuplicateEndpoint: return "DuplicateEndpoint";
    case ErrorCode::NotAssignee: return "NotAssignee";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::StaleMicrotask: return "StaleMicrotask";
    case ErrorCode::AlreadyAssigned: return "AlreadyAssigned";
    case ErrorCode::DuplicateBehavior: return "DuplicateBehavior";
    case ErrorCode::NoBehaviors: return "NoBehaviors";
    case ErrorCode::AlreadyDeclared: return "AlreadyDeclared";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::EmptyAssertions: return "EmptyAssertions";
    case ErrorCode::UnknownPseudoCallType: return "UnknownPseudoCallType";
    case ErrorCode::DuplicateFunctionName: return "DuplicateFunctionName";
    case ErrorCode::NoOpenFailure: return "NoOpenFailure";
    case ErrorCode::UnknownBehavior: return "UnknownBehavior";
    case ErrorCode::FunctionComplete: return "FunctionComplete";
    case ErrorCode::UnresolvedContradiction: return "UnresolvedContradiction";
    case ErrorCode::UnknownConflict: return "UnknownConflict";
    case ErrorCode::AlreadyTicketed: return "AlreadyTicketed";
    case ErrorCode::RunnerUnavailable: return "RunnerUnavailable";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::UnknownState: return "UnknownState";
    case ErrorCode::TransitionViolation: return "TransitionViolation";
    case ErrorCode::NotComplete: return "NotComplete";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::ServiceUnreachable: return "ServiceUnreachable";
  }
  return "Unknown";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::BadSchema:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownWorker:
      return 404;
    case ErrorCode::RunnerUnavailable:
      return 503;
    case ErrorCode::ProtocolViolation:
      return 502;
    case ErrorCode::CorruptLog:
    case ErrorCode::StorageFull:
    case ErrorCode::TransitionViolation:
    case ErrorCode::UnknownState:
      return 500;
    default:
      return 409;
  }
}

}  // namespace microflow
