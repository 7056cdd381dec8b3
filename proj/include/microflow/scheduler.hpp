#pragma once

#include <optional>
#include <vector>

#include "microflow/events.hpp"
#include "microflow/model.hpp"

namespace microflow {

struct SchedulerConfig {
  // Twice the five-minute median completion ceiling.
  int lease_seconds = 600;
  int max_skips_before_flag = 3;
  int max_attempts = 10;
  bool self_exclusion_enabled = false;
  int identify_quorum = 1;

  /// Throws BadRequest unless every numeric field is positive.
  void validate() const;
};

Value to_value(const SchedulerConfig& c);
SchedulerConfig scheduler_config_from_value(const Value& v);

/// Global ready queue over the folded state. All operations emit events
/// into a Txn; the owner serializes commits, which makes each operation
/// atomic and linearizable.
namespace scheduler {

struct Assignment {
  MicrotaskId microtask;
  Millis lease_expiry = 0;
};

/// ImplementBehavior and DebugFailure mutate a function's implementation.
bool is_writer_kind(MicrotaskKind kind);

/// Whether an implementation-mutating microtask of `function` is Assigned.
bool writer_in_flight(const State& state, FunctionId function);

/// Queues a new microtask at the back of its priority class. `attempt`
/// continues a repair chain; `stuck` marks it as past the attempt cap.
MicrotaskId enqueue(Txn& txn, ProjectId project, MicrotaskKind kind,
                    FunctionId function, std::optional<BehaviorId> behavior = {},
                    std::optional<ConflictId> conflict = {}, bool revision = false,
                    bool reopen_identify = false, int attempt = 1, bool stuck = false);

/// Whether `worker` may take `m` right now (single-writer, conflict hold,
/// and optional self-exclusion).
bool eligible(const State& state, const Microtask& m, WorkerId worker,
              const SchedulerConfig& config);

/// Highest-priority eligible entry, FIFO within a class. Throws
/// UnknownWorker / AlreadyAssigned.
std::optional<Assignment> fetch_next(Txn& txn, WorkerId worker,
                                     const SchedulerConfig& config);

/// Returns an assignment to the queue. Throws NotAssignee / StaleMicrotask.
void skip(Txn& txn, WorkerId worker, MicrotaskId microtask,
          const SchedulerConfig& config);

/// Requeues every assignment whose lease expired strictly before now.
std::vector<MicrotaskId> reclaim_expired(Txn& txn, const SchedulerConfig& config);

}  // namespace scheduler
}  // namespace microflow
