#include "microflow/events.hpp"

#include <algorithm>
#include <array>

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"
#include "microflow/transitions.hpp"

namespace microflow {

namespace {

constexpr std::array<std::string_view, 19> kEventNames{
    "ProjectCreated",       "FunctionSpecAdded",  "MicrotaskQueued",
    "MicrotaskAssigned",    "MicrotaskSkipped",   "MicrotaskTimedOut",
    "SubmissionApplied",    "BehaviorAdded",      "TestStored",
    "ImplementationStored", "SuiteRan",           "ConflictOpened",
    "ConflictResolved",     "BehaviorRetired",    "FunctionCompleted",
    "ProjectCompleted",     "WorkerRegistered",   "BehaviorEdited",
    "NoMoreBehaviorsDeclared",
};

bool flag(const Value& v) { return v.is_bool() && v.as_bool(); }

template <class Enum>
void move_state(Enum& current, Enum next) {
  require_transition(current, next);
  current = next;
}

void bump(std::uint64_t& counter, std::uint64_t used) {
  counter = std::max(counter, used + 1);
}

void clear_slot(State& s, WorkerId worker, MicrotaskId m) {
  Worker& w = s.worker(worker);
  if (w.assigned != m) {
    fail(ErrorCode::TransitionViolation,
         "worker " + worker.str() + " does not hold " + m.str());
  }
  w.assigned.reset();
}

void requeue(State& s, Microtask& m, std::uint64_t enqueue_seq) {
  move_state(m.state, MicrotaskState::Queued);
  m.assignee.reset();
  m.lease_expiry.reset();
  m.enqueue_seq = enqueue_seq;
  bump(s.next_enqueue, enqueue_seq);
  s.queue.emplace(priority_class(m.kind), m.enqueue_seq, m.id);
}

void on_microtask_queued(State& s, const Value& p) {
  Microtask m = from_value<Microtask>(p.at("microtask"));
  if (s.microtasks.count(m.id) != 0) {
    fail(ErrorCode::TransitionViolation, "duplicate microtask " + m.id.str());
  }
  if (m.state != MicrotaskState::Queued) {
    fail(ErrorCode::TransitionViolation, "microtask must start Queued");
  }
  bump(s.next_microtask, m.id.value);
  bump(s.next_enqueue, m.enqueue_seq);
  if (m.revision && m.behavior) s.behavior(*m.behavior).revision_pending = true;
  if (m.conflict) s.conflict(*m.conflict).ticket = m.id;
  if (m.kind == MicrotaskKind::IdentifyBehavior) {
    FunctionSpec& f = s.function(m.function);
    f.identify_closed = false;
    if (flag(p.get("reopenIdentify"))) f.no_more_declared_by.clear();
  }
  s.queue.emplace(priority_class(m.kind), m.enqueue_seq, m.id);
  s.microtasks.emplace(m.id, std::move(m));
}

void on_assigned(State& s, const Event& e) {
  const Value& p = e.payload;
  Microtask& m = s.microtask(id_from<'m'>(p.at("microtaskId")));
  WorkerId wid = id_from<'w'>(p.at("workerId"));
  Worker& w = s.worker(wid);
  if (w.assigned) {
    fail(ErrorCode::TransitionViolation, "worker " + wid.str() + " already holds " +
                                             w.assigned->str());
  }
  move_state(m.state, MicrotaskState::Assigned);
  s.queue.erase({priority_class(m.kind), m.enqueue_seq, m.id});
  m.assignee = wid;
  m.lease_expiry = p.at("leaseExpiry").as_int();
  m.assigned_at = e.timestamp;
  w.assigned = m.id;
}

void on_skipped(State& s, const Value& p) {
  Microtask& m = s.microtask(id_from<'m'>(p.at("microtaskId")));
  WorkerId wid = id_from<'w'>(p.at("workerId"));
  move_state(m.state, MicrotaskState::Skipped);
  clear_slot(s, wid, m.id);
  s.worker(wid).skip_count++;
  m.skip_count++;
  m.flagged = m.flagged || flag(p.get("flagged"));
  requeue(s, m, static_cast<std::uint64_t>(p.at("enqueueSeq").as_int()));
}

void on_timed_out(State& s, const Value& p) {
  Microtask& m = s.microtask(id_from<'m'>(p.at("microtaskId")));
  WorkerId wid = id_from<'w'>(p.at("workerId"));
  move_state(m.state, MicrotaskState::TimedOut);
  clear_slot(s, wid, m.id);
  m.attempt = static_cast<int>(p.at("attempt").as_int());
  m.stuck = m.stuck || flag(p.get("stuck"));
  requeue(s, m, static_cast<std::uint64_t>(p.at("enqueueSeq").as_int()));
}

void on_submission(State& s, const Event& e) {
  const Value& p = e.payload;
  Microtask& m = s.microtask(id_from<'m'>(p.at("microtaskId")));
  WorkerId wid = id_from<'w'>(p.at("workerId"));
  if (m.assignee != wid) {
    fail(ErrorCode::TransitionViolation, "submission by non-assignee");
  }
  move_state(m.state, MicrotaskState::Submitted);
  clear_slot(s, wid, m.id);
  const std::string& outcome = p.at("outcome").as_string();
  if (outcome == "completed") {
    move_state(m.state, MicrotaskState::Completed);
    m.completed_at = e.timestamp;
    s.worker(wid).completed_count++;
  } else if (outcome == "requeued") {
    m.attempt = static_cast<int>(p.at("attempt").as_int());
    m.stuck = m.stuck || flag(p.get("stuck"));
    requeue(s, m, static_cast<std::uint64_t>(p.at("enqueueSeq").as_int()));
  } else {
    fail(ErrorCode::BadRequest, "unknown submission outcome " + outcome);
  }
}

void on_behavior_added(State& s, const Value& p) {
  Behavior b = from_value<Behavior>(p.at("behavior"));
  if (s.behaviors.count(b.id) != 0 || b.state != BehaviorState::Identified) {
    fail(ErrorCode::TransitionViolation, "bad behavior insert " + b.id.str());
  }
  bump(s.next_behavior, b.id.value);
  FunctionSpec& f = s.function(b.function);
  f.behaviors.push_back(b.id);
  if (f.state == FunctionState::Specified) {
    move_state(f.state, FunctionState::InProgress);
  }
  s.behaviors.emplace(b.id, std::move(b));
}

void on_test_stored(State& s, const Value& p) {
  TestArtifact t = from_value<TestArtifact>(p.at("test"));
  Behavior& b = s.behavior(t.behavior);
  auto it = s.tests.find(t.id);
  int expected_version = it == s.tests.end() ? 1 : it->second.version + 1;
  if (t.version != expected_version) {
    fail(ErrorCode::TransitionViolation, "test version must increase by 1");
  }
  bump(s.next_test, t.id.value);
  b.test = t.id;
  b.revision_pending = false;
  if (b.state == BehaviorState::Identified || b.state == BehaviorState::Passing) {
    move_state(b.state, BehaviorState::Tested);
  } else if (b.state == BehaviorState::Retired) {
    fail(ErrorCode::TransitionViolation, "test stored on retired behavior");
  }
  s.tests[t.id] = std::move(t);
}

void on_implementation_stored(State& s, const Value& p) {
  Implementation impl = from_value<Implementation>(p.at("implementation"));
  FunctionSpec& f = s.function(impl.function);
  int previous = f.implementation ? f.implementation->version : 0;
  if (impl.version <= previous) {
    fail(ErrorCode::TransitionViolation, "implementation version must increase");
  }
  f.implementation = std::move(impl);
}

void on_suite_ran(State& s, const Value& p) {
  FunctionSpec& f = s.function(id_from<'f'>(p.at("functionId")));
  if (p.contains("failureReport")) {
    f.open_failure = from_value<FailureReport>(p.at("failureReport"));
  } else {
    f.open_failure.reset();
  }
  for (const auto& item : p.get("passing").is_null() ? Value::List{}
                                                       : p.at("passing").as_list()) {
    move_state(s.behavior(id_from<'b'>(item)).state, BehaviorState::Passing);
  }
}

void on_conflict_opened(State& s, const Value& p) {
  Conflict c = from_value<Conflict>(p.at("conflict"));
  if (s.conflicts.count(c.id) != 0 || c.state != ConflictState::Open) {
    fail(ErrorCode::TransitionViolation, "bad conflict insert " + c.id.str());
  }
  bump(s.next_conflict, c.id.value);
  for (BehaviorId bid : {c.a.behavior, c.b.behavior}) {
    Behavior& b = s.behavior(bid);
    if (b.state != BehaviorState::Conflicted) {
      move_state(b.state, BehaviorState::Conflicted);
    }
  }
  s.conflicts.emplace(c.id, std::move(c));
}

void on_conflict_resolved(State& s, const Value& p) {
  Conflict& c = s.conflict(id_from<'c'>(p.at("conflictId")));
  if (c.state != ConflictState::Open) {
    fail(ErrorCode::TransitionViolation, "conflict already resolved");
  }
  c.state = ConflictState::Resolved;
  for (const auto& item : p.get("released").is_null() ? Value::List{}
                                                        : p.at("released").as_list()) {
    move_state(s.behavior(id_from<'b'>(item)).state, BehaviorState::Tested);
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  return kEventNames.at(static_cast<std::size_t>(kind));
}

EventKind event_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == text) return static_cast<EventKind>(i);
  }
  fail(ErrorCode::CorruptLog, "unknown event kind '" + std::string(text) + "'");
}

Value to_value(const Event& e) {
  Value out = Value::object();
  out["seq"] = e.seq;
  out["ts"] = e.timestamp;
  out["kind"] = to_string(e.kind);
  out["payload"] = e.payload;
  out["commitEnd"] = e.commit_end;
  return out;
}

Event event_from_value(const Value& v) {
  Event e;
  e.seq = v.at("seq").as_int();
  e.timestamp = v.at("ts").as_int();
  e.kind = event_kind_from_string(v.at("kind").as_string());
  e.payload = v.at("payload");
  e.commit_end = flag(v.get("commitEnd"));
  return e;
}

void apply_event(State& s, const Event& e) {
  if (e.seq != s.last_seq + 1) {
    fail(ErrorCode::CorruptLog, "sequence gap at " + std::to_string(e.seq));
  }
  const Value& p = e.payload;
  switch (e.kind) {
    case EventKind::WorkerRegistered: {
      Worker w;
      w.id = id_from<'w'>(p.at("workerId"));
      w.handle = p.get("handle").is_string() ? p.at("handle").as_string() : "";
      if (s.workers.count(w.id) != 0) {
        fail(ErrorCode::TransitionViolation, "duplicate worker " + w.id.str());
      }
      bump(s.next_worker, w.id.value);
      s.workers.emplace(w.id, std::move(w));
      break;
    }
    case EventKind::ProjectCreated: {
      Project project;
      project.id = id_from<'p'>(p.at("projectId"));
      project.spec = from_value<ProjectSpec>(p.at("spec"));
      bump(s.next_project, project.id.value);
      s.projects.emplace(project.id, std::move(project));
      break;
    }
    case EventKind::FunctionSpecAdded: {
      FunctionSpec f = from_value<FunctionSpec>(p.at("function"));
      if (s.functions.count(f.id) != 0) {
        fail(ErrorCode::TransitionViolation, "duplicate function " + f.id.str());
      }
      bump(s.next_function, f.id.value);
      auto& project = s.projects.at(f.project);
      project.functions.push_back(f.id);
      s.functions.emplace(f.id, std::move(f));
      break;
    }
    case EventKind::MicrotaskQueued: on_microtask_queued(s, p); break;
    case EventKind::MicrotaskAssigned: on_assigned(s, e); break;
    case EventKind::MicrotaskSkipped: on_skipped(s, p); break;
    case EventKind::MicrotaskTimedOut: on_timed_out(s, p); break;
    case EventKind::SubmissionApplied: on_submission(s, e); break;
    case EventKind::BehaviorAdded: on_behavior_added(s, p); break;
    case EventKind::BehaviorEdited:
      s.behavior(id_from<'b'>(p.at("behaviorId"))).statement =
          p.at("statement").as_string();
      break;
    case EventKind::NoMoreBehaviorsDeclared: {
      FunctionSpec& f = s.function(id_from<'f'>(p.at("functionId")));
      f.no_more_declared_by.insert(id_from<'w'>(p.at("workerId")));
      f.identify_closed = flag(p.get("closed"));
      break;
    }
    case EventKind::TestStored: on_test_stored(s, p); break;
    case EventKind::ImplementationStored: on_implementation_stored(s, p); break;
    case EventKind::SuiteRan: on_suite_ran(s, p); break;
    case EventKind::ConflictOpened: on_conflict_opened(s, p); break;
    case EventKind::ConflictResolved: on_conflict_resolved(s, p); break;
    case EventKind::BehaviorRetired:
      move_state(s.behavior(id_from<'b'>(p.at("behaviorId"))).state,
                 BehaviorState::Retired);
      break;
    case EventKind::FunctionCompleted:
      move_state(s.function(id_from<'f'>(p.at("functionId"))).state,
                 FunctionState::Complete);
      break;
    case EventKind::ProjectCompleted: {
      Project& project = s.projects.at(id_from<'p'>(p.at("projectId")));
      if (project.state == ProjectState::Complete) {
        fail(ErrorCode::TransitionViolation, "project already complete");
      }
      project.state = ProjectState::Complete;
      break;
    }
  }
  s.last_seq = e.seq;
}

State fold(State base, std::span<const Event> events) {
  for (const auto& e : events) apply_event(base, e);
  return base;
}

const Event& Txn::emit(EventKind kind, Value payload) {
  Event e;
  e.seq = state_.last_seq + 1;
  e.timestamp = now_;
  e.kind = kind;
  e.payload = std::move(payload);
  apply_event(state_, e);
  events_.push_back(std::move(e));
  return events_.back();
}

}  // namespace microflow
