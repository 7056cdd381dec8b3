#pragma once

#include <string_view>

#include "microflow/model.hpp"

namespace microflow {

enum class EntityKind { Behavior, Microtask, Function };

std::string_view to_string(EntityKind kind);

/// Checks an edge of the fixed lifecycle relation. States are given by name;
/// throws DomainError(UnknownState) when a name is outside the entity's
/// state set.
///
///   Behavior:  Identified->Tested->Passing, Tested->Conflicted,
///              Conflicted->Tested, Passing->Conflicted, Passing->Tested,
///              any live state->Retired
///   Microtask: Queued->Assigned, Assigned->{Submitted,TimedOut,Skipped},
///              TimedOut->Queued, Skipped->Queued, Submitted->{Completed,Queued}
///   Function:  Specified->InProgress->Complete
bool check_transition(EntityKind kind, std::string_view from,
                      std::string_view to);

bool transition_allowed(BehaviorState from, BehaviorState to);
bool transition_allowed(MicrotaskState from, MicrotaskState to);
bool transition_allowed(FunctionState from, FunctionState to);

// Throw DomainError(TransitionViolation) for an edge outside the relation.
void require_transition(BehaviorState from, BehaviorState to);
void require_transition(MicrotaskState from, MicrotaskState to);
void require_transition(FunctionState from, FunctionState to);

}  // namespace microflow
