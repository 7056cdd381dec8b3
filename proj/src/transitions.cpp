#include "microflow/transitions.hpp"

#include <string>

#include "microflow/errors.hpp"

namespace microflow {

namespace {

template <class Enum>
Enum parse_state(std::string_view text) {
  try {
    return enum_from_string<Enum>(text);
  } catch (const DomainError&) {
    fail(ErrorCode::UnknownState, "unknown state '" + std::string(text) + "'");
  }
}

template <class Enum>
void require(Enum from, Enum to, const char* entity) {
  if (!transition_allowed(from, to)) {
    fail(ErrorCode::TransitionViolation,
         std::string(entity) + " " + std::string(to_string(from)) + " -> " +
             std::string(to_string(to)));
  }
}

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Behavior: return "Behavior";
    case EntityKind::Microtask: return "Microtask";
    case EntityKind::Function: return "Function";
  }
  return "?";
}

bool transition_allowed(BehaviorState from, BehaviorState to) {
  using S = BehaviorState;
  if (to == S::Retired) return from != S::Retired;
  switch (from) {
    case S::Identified: return to == S::Tested;
    case S::Tested: return to == S::Passing || to == S::Conflicted;
    case S::Passing: return to == S::Conflicted || to == S::Tested;
    case S::Conflicted: return to == S::Tested;
    case S::Retired: return false;
  }
  return false;
}

bool transition_allowed(MicrotaskState from, MicrotaskState to) {
  using S = MicrotaskState;
  switch (from) {
    case S::Queued: return to == S::Assigned;
    case S::Assigned:
      return to == S::Submitted || to == S::TimedOut || to == S::Skipped;
    case S::Submitted: return to == S::Completed || to == S::Queued;
    case S::TimedOut:
    case S::Skipped:
      return to == S::Queued;
    case S::Completed: return false;
  }
  return false;
}

bool transition_allowed(FunctionState from, FunctionState to) {
  return (from == FunctionState::Specified && to == FunctionState::InProgress) ||
         (from == FunctionState::InProgress && to == FunctionState::Complete);
}

bool check_transition(EntityKind kind, std::string_view from,
                      std::string_view to) {
  switch (kind) {
    case EntityKind::Behavior:
      return transition_allowed(parse_state<BehaviorState>(from),
                                parse_state<BehaviorState>(to));
    case EntityKind::Microtask:
      return transition_allowed(parse_state<MicrotaskState>(from),
                                parse_state<MicrotaskState>(to));
    case EntityKind::Function:
      return transition_allowed(parse_state<FunctionState>(from),
                                parse_state<FunctionState>(to));
  }
  return false;
}

void require_transition(BehaviorState from, BehaviorState to) {
  require(from, to, "Behavior");
}
void require_transition(MicrotaskState from, MicrotaskState to) {
  require(from, to, "Microtask");
}
void require_transition(FunctionState from, FunctionState to) {
  require(from, to, "Function");
}

}  // namespace microflow
