#include "microflow/scheduler.hpp"

#include "microflow/codec.hpp"
#include "microflow/conflicts.hpp"
#include "microflow/errors.hpp"

namespace microflow {

void SchedulerConfig::validate() const {
  if (lease_seconds <= 0 || max_skips_before_flag <= 0 || max_attempts <= 0 ||
      identify_quorum <= 0) {
    fail(ErrorCode::BadRequest, "scheduler settings must be positive");
  }
}

Value to_value(const SchedulerConfig& c) {
  Value out = Value::object();
  out["leaseSeconds"] = c.lease_seconds;
  out["maxSkipsBeforeFlag"] = c.max_skips_before_flag;
  out["maxAttempts"] = c.max_attempts;
  out["selfExclusionEnabled"] = c.self_exclusion_enabled;
  out["identifyQuorum"] = c.identify_quorum;
  return out;
}

SchedulerConfig scheduler_config_from_value(const Value& v) {
  SchedulerConfig c;
  auto read = [&](const char* key, int& field) {
    if (!v.get(key).is_null()) field = static_cast<int>(v.at(key).as_int());
  };
  read("leaseSeconds", c.lease_seconds);
  read("maxSkipsBeforeFlag", c.max_skips_before_flag);
  read("maxAttempts", c.max_attempts);
  read("identifyQuorum", c.identify_quorum);
  if (!v.get("selfExclusionEnabled").is_null()) {
    c.self_exclusion_enabled = v.at("selfExclusionEnabled").as_bool();
  }
  c.validate();
  return c;
}

namespace scheduler {

namespace {

Value base_payload(const Microtask& m) {
  Value p = Value::object();
  p["projectId"] = m.project.str();
  p["microtaskId"] = m.id.str();
  return p;
}

bool authored_target(const State& state, const Microtask& m, WorkerId worker) {
  if (m.kind != MicrotaskKind::ImplementBehavior || !m.behavior) return false;
  const Behavior& b = state.behavior(*m.behavior);
  const TestArtifact* test = state.test_of(b);
  return test != nullptr && test->author == worker;
}

}  // namespace

bool is_writer_kind(MicrotaskKind kind) {
  return kind == MicrotaskKind::ImplementBehavior ||
         kind == MicrotaskKind::DebugFailure;
}

bool writer_in_flight(const State& state, FunctionId function) {
  for (const auto& [_, w] : state.workers) {
    if (!w.assigned) continue;
    const Microtask& m = state.microtask(*w.assigned);
    if (m.function == function && is_writer_kind(m.kind)) return true;
  }
  return false;
}

MicrotaskId enqueue(Txn& txn, ProjectId project, MicrotaskKind kind,
                    FunctionId function, std::optional<BehaviorId> behavior,
                    std::optional<ConflictId> conflict, bool revision,
                    bool reopen_identify, int attempt, bool stuck) {
  const State& s = txn.state();
  Microtask m;
  m.id = MicrotaskId{s.next_microtask};
  m.project = project;
  m.kind = kind;
  m.function = function;
  m.behavior = behavior;
  m.conflict = conflict;
  m.revision = revision;
  m.attempt = attempt;
  m.stuck = stuck;
  m.enqueue_seq = s.next_enqueue;
  m.created_at = txn.now();
  Value p = Value::object();
  p["projectId"] = project.str();
  p["microtask"] = to_value(m);
  if (reopen_identify) p["reopenIdentify"] = true;
  txn.emit(EventKind::MicrotaskQueued, std::move(p));
  return m.id;
}

bool eligible(const State& state, const Microtask& m, WorkerId worker,
              const SchedulerConfig& config) {
  if (m.state != MicrotaskState::Queued) return false;
  if (is_writer_kind(m.kind)) {
    if (writer_in_flight(state, m.function)) return false;
    if (conflicts::has_open_conflict(state, m.function)) return false;
  }
  if (config.self_exclusion_enabled && authored_target(state, m, worker)) {
    return false;
  }
  return true;
}

std::optional<Assignment> fetch_next(Txn& txn, WorkerId worker,
                                     const SchedulerConfig& config) {
  const State& s = txn.state();
  const Worker& w = s.worker(worker);
  if (w.assigned) {
    fail(ErrorCode::AlreadyAssigned,
         worker.str() + " already holds " + w.assigned->str());
  }
  for (const auto& [cls, seq, id] : s.queue) {
    const Microtask& m = s.microtask(id);
    if (!eligible(s, m, worker, config)) continue;
    Assignment a{id, txn.now() + static_cast<Millis>(config.lease_seconds) * 1000};
    Value p = base_payload(m);
    p["workerId"] = worker.str();
    p["leaseExpiry"] = a.lease_expiry;
    p["kind"] = to_string(m.kind);
    txn.emit(EventKind::MicrotaskAssigned, std::move(p));
    return a;
  }
  return std::nullopt;
}

void skip(Txn& txn, WorkerId worker, MicrotaskId id, const SchedulerConfig& config) {
  const State& s = txn.state();
  s.worker(worker);
  const Microtask& m = s.microtask(id);
  if (m.state != MicrotaskState::Assigned) {
    fail(ErrorCode::StaleMicrotask, id.str() + " is " + std::string(to_string(m.state)));
  }
  if (m.assignee != worker) {
    fail(ErrorCode::NotAssignee, id.str() + " is not assigned to " + worker.str());
  }
  Value p = base_payload(m);
  p["workerId"] = worker.str();
  p["flagged"] = m.skip_count + 1 >= config.max_skips_before_flag;
  p["enqueueSeq"] = s.next_enqueue;
  txn.emit(EventKind::MicrotaskSkipped, std::move(p));
}

std::vector<MicrotaskId> reclaim_expired(Txn& txn, const SchedulerConfig& config) {
  std::vector<MicrotaskId> expired;
  for (const auto& [id, m] : txn.state().microtasks) {
    if (m.state == MicrotaskState::Assigned && m.lease_expiry &&
        *m.lease_expiry < txn.now()) {
      expired.push_back(id);
    }
  }
  for (MicrotaskId id : expired) {
    const Microtask& m = txn.state().microtask(id);
    Value p = base_payload(m);
    p["workerId"] = m.assignee->str();
    p["attempt"] = m.attempt + 1;
    p["stuck"] = m.attempt + 1 > config.max_attempts;
    p["enqueueSeq"] = txn.state().next_enqueue;
    txn.emit(EventKind::MicrotaskTimedOut, std::move(p));
  }
  return expired;
}

}  // namespace scheduler
}  // namespace microflow
