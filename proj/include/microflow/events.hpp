#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "microflow/model.hpp"
#include "microflow/value.hpp"

namespace microflow {

enum class EventKind {
  ProjectCreated,
  FunctionSpecAdded,
  MicrotaskQueued,
  MicrotaskAssigned,
  MicrotaskSkipped,
  MicrotaskTimedOut,
  SubmissionApplied,
  BehaviorAdded,
  TestStored,
  ImplementationStored,
  SuiteRan,
  ConflictOpened,
  ConflictResolved,
  BehaviorRetired,
  FunctionCompleted,
  ProjectCompleted,
  WorkerRegistered,
  BehaviorEdited,
  NoMoreBehaviorsDeclared,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

struct Event {
  std::int64_t seq = 0;
  Millis timestamp = 0;
  EventKind kind = EventKind::ProjectCreated;
  Value payload;
  // Set on the final event of each engine commit; recovery truncates
  // anything after the last marker.
  bool commit_end = false;

  friend bool operator==(const Event&, const Event&) = default;
};

Value to_value(const Event& e);
Event event_from_value(const Value& v);

/// Applies one event to `state`. Every state mutation in the system goes
/// through here, and every lifecycle change is checked against the
/// transition relation (throws TransitionViolation).
void apply_event(State& state, const Event& event);

/// Folds `events` onto `base`.
State fold(State base, std::span<const Event> events);

/// A unit of atomic change: events are applied to a private copy of the
/// state as they are emitted, so later decisions in the same commit see
/// earlier effects. Nothing is visible outside until the owner publishes
/// the copy.
class Txn {
 public:
  Txn(const State& base, Millis now) : state_(base), now_(now) {}

  const Event& emit(EventKind kind, Value payload);

  const State& state() const { return state_; }
  State& mutable_state() { return state_; }
  Millis now() const { return now_; }
  std::vector<Event>& events() { return events_; }
  const std::vector<Event>& events() const { return events_; }

 private:
  State state_;
  Millis now_;
  std::vector<Event> events_;
};

}  // namespace microflow
