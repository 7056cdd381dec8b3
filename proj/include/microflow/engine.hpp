#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "microflow/events.hpp"
#include "microflow/harness.hpp"
#include "microflow/model.hpp"
#include "microflow/scheduler.hpp"

namespace microflow {

struct EngineConfig {
  SchedulerConfig scheduler;
  HarnessConfig harness;
};

struct SubmissionResult {
  std::vector<MicrotaskId> spawned;
  bool requeued = false;  // a failing fix sent the debug microtask back
  bool project_completed = false;
};

/// Parses a wire project spec. Throws BadSchema for malformed endpoints or
/// field types, EmptyProject and DuplicateEndpoint per the creation rules.
ProjectSpec parse_project_spec(const Value& v);

/// Single logical writer over the service state. Each public mutation runs
/// in one Txn: events are handed to the sink (the event log) and only then
/// published; any exception leaves the state untouched.
class Engine {
 public:
  using Sink = std::function<void(std::span<const Event>)>;

  explicit Engine(EngineConfig config, State initial = {});

  void set_sink(Sink sink) { sink_ = std::move(sink); }
  /// Adapter used for Source implementations instead of the configured
  /// commands.
  void set_runner(RunnerAdapter* runner) { runner_ = runner; }

  const State& state() const { return state_; }
  const EngineConfig& config() const { return config_; }

  ProjectId create_project(Millis now, const ProjectSpec& spec);
  WorkerId register_worker(Millis now, const std::string& handle);

  /// Reclaims expired leases, then assigns the next eligible microtask.
  std::optional<scheduler::Assignment> fetch(Millis now, WorkerId worker);
  void skip(Millis now, WorkerId worker, MicrotaskId microtask);
  std::vector<MicrotaskId> reclaim(Millis now);

  /// Applies a kind-tagged submission body. Throws NotAssignee,
  /// KindMismatch, StaleMicrotask and the per-kind validation errors.
  SubmissionResult submit(Millis now, WorkerId worker, MicrotaskId microtask,
                          const Value& body);

  /// Kind-specific view of a microtask as handed to its worker.
  Value render_assignment(MicrotaskId microtask) const;

 private:
  template <class Fn>
  auto commit(Millis now, Fn&& fn);
  void publish(Txn& txn);

  EngineConfig config_;
  State state_;
  Sink sink_;
  RunnerAdapter* runner_ = nullptr;
};

}  // namespace microflow
