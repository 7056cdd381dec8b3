#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "microflow/value.hpp"

namespace microflow {

using Millis = std::int64_t;

/// Opaque identifier rendered as a one-letter prefix plus a counter, e.g. "m12".
template <char Prefix>
struct Id {
  std::uint64_t value = 0;

  static constexpr char prefix = Prefix;

  std::string str() const { return Prefix + std::to_string(value); }
  /// Throws BadRequest when `text` is not of the form <prefix><digits>.
  static Id parse(std::string_view text);

  explicit operator bool() const { return value != 0; }
  auto operator<=>(const Id&) const = default;
};

using ProjectId = Id<'p'>;
using FunctionId = Id<'f'>;
using BehaviorId = Id<'b'>;
using TestId = Id<'t'>;
using MicrotaskId = Id<'m'>;
using WorkerId = Id<'w'>;
using ConflictId = Id<'c'>;

enum class HttpMethod { Get, Post, Put, Delete };
enum class ScalarType { String, Number, Boolean, List, Object };
enum class FunctionState { Specified, InProgress, Complete };
enum class BehaviorState { Identified, Tested, Passing, Conflicted, Retired };
enum class MicrotaskKind {
  IdentifyBehavior,
  WriteTest,
  ImplementBehavior,
  DebugFailure,
  ResolveConflict
};
enum class MicrotaskState {
  Queued,
  Assigned,
  Submitted,
  Completed,
  Skipped,
  TimedOut
};
enum class ConflictState { Open, Resolved };
enum class ProjectState { Active, Complete };
enum class ImplementationKind { Table, Source };
enum class CaseStatus { Pass, Fail, Error, Timeout };

std::string_view to_string(HttpMethod v);
std::string_view to_string(ScalarType v);
std::string_view to_string(FunctionState v);
std::string_view to_string(BehaviorState v);
std::string_view to_string(MicrotaskKind v);
std::string_view to_string(MicrotaskState v);
std::string_view to_string(ConflictState v);
std::string_view to_string(ProjectState v);
std::string_view to_string(ImplementationKind v);
std::string_view to_string(CaseStatus v);

// Parsers throw BadRequest on unknown names.
template <class Enum>
Enum enum_from_string(std::string_view text);

struct Field {
  std::string name;
  ScalarType type = ScalarType::String;

  friend bool operator==(const Field&, const Field&) = default;
};

struct EndpointDescription {
  HttpMethod method = HttpMethod::Get;
  std::string path;
  std::string name;
  std::string description;
  std::vector<Field> request_schema;
  std::vector<Field> response_schema;
};

struct ProjectSpec {
  std::string name;
  std::vector<EndpointDescription> endpoints;
};

struct Assertion {
  std::vector<Value> args;
  Value expected;

  friend bool operator==(const Assertion&, const Assertion&) = default;
};

struct PseudoCall {
  std::string name;
  std::vector<Field> params;
  ScalarType return_type = ScalarType::Object;
  std::string description;
};

/// Lookup table keyed by canonical argument list, with a fallback.
struct Table {
  std::map<std::string, Value> entries;
  Value default_value;

  void set(const std::vector<Value>& args, Value result);
  const Value& lookup(const std::vector<Value>& args) const;
};

std::string canonical_args(const std::vector<Value>& args);

struct Implementation {
  FunctionId function;
  ImplementationKind kind = ImplementationKind::Table;
  std::optional<Table> table;
  std::optional<std::string> source;
  std::string language_tag = "table";
  int version = 0;
  std::vector<PseudoCall> pseudo_calls;
  WorkerId author;
};

struct FunctionOrigin {
  bool endpoint_root = true;
  std::string endpoint_name;  // set for endpoint roots
  FunctionId spawned_by;      // set for pseudo-calls
};

struct FailureEntry {
  BehaviorId behavior;
  std::size_t assertion_index = 0;
  std::vector<Value> args;
  Value expected;
  CaseStatus status = CaseStatus::Fail;
  std::optional<Value> actual;
  std::optional<std::string> error;
};

struct FailureReport {
  FunctionId function;
  int implementation_version = 0;
  std::vector<FailureEntry> failures;
};

struct FunctionSpec {
  FunctionId id;
  ProjectId project;
  std::string name;
  std::vector<Field> params;
  ScalarType return_type = ScalarType::Object;
  std::string description;
  FunctionOrigin origin;
  FunctionState state = FunctionState::Specified;
  std::vector<BehaviorId> behaviors;
  std::set<WorkerId> no_more_declared_by;
  bool identify_closed = false;
  std::optional<Implementation> implementation;
  std::optional<FailureReport> open_failure;

  std::size_t no_more_declarations() const { return no_more_declared_by.size(); }
};

struct Behavior {
  BehaviorId id;
  FunctionId function;
  std::string statement;
  BehaviorState state = BehaviorState::Identified;
  std::optional<TestId> test;
  WorkerId author;
  // A disputed test awaiting its WriteTest revision; its assertions are
  // inactive until the revision lands.
  bool revision_pending = false;
};

struct TestArtifact {
  TestId id;
  BehaviorId behavior;
  std::vector<Assertion> assertions;
  WorkerId author;
  int version = 1;
};

struct Microtask {
  MicrotaskId id;
  ProjectId project;
  MicrotaskKind kind = MicrotaskKind::IdentifyBehavior;
  FunctionId function;
  std::optional<BehaviorId> behavior;
  std::optional<ConflictId> conflict;
  bool revision = false;  // WriteTest re-opened by a dispute
  MicrotaskState state = MicrotaskState::Queued;
  std::optional<WorkerId> assignee;
  std::optional<Millis> lease_expiry;
  int attempt = 1;
  int skip_count = 0;
  std::uint64_t enqueue_seq = 0;
  bool flagged = false;  // skipped too often
  bool stuck = false;    // exceeded the attempt cap
  Millis created_at = 0;
  std::optional<Millis> assigned_at;
  std::optional<Millis> completed_at;

  bool terminal() const { return state == MicrotaskState::Completed; }
};

struct Worker {
  WorkerId id;
  std::string handle;
  std::optional<MicrotaskId> assigned;
  int completed_count = 0;
  int skip_count = 0;
};

struct AssertionRef {
  BehaviorId behavior;
  std::size_t index = 0;

  auto operator<=>(const AssertionRef&) const = default;
};

struct Conflict {
  ConflictId id;
  FunctionId function;
  AssertionRef a;
  AssertionRef b;
  std::vector<Value> args;
  Value expected_a;
  Value expected_b;
  ConflictState state = ConflictState::Open;
  std::optional<MicrotaskId> ticket;
};

struct Project {
  ProjectId id;
  ProjectSpec spec;
  std::vector<FunctionId> functions;
  ProjectState state = ProjectState::Active;
};

/// Priority class: lower value is served first.
int priority_class(MicrotaskKind kind);

/// Key ordering the ready queue: (priority class, enqueue sequence).
using QueueKey = std::tuple<int, std::uint64_t, MicrotaskId>;

/// Whole-service state. Every field is the result of folding the event log.
struct State {
  std::int64_t last_seq = 0;

  std::uint64_t next_project = 1;
  std::uint64_t next_function = 1;
  std::uint64_t next_behavior = 1;
  std::uint64_t next_test = 1;
  std::uint64_t next_microtask = 1;
  std::uint64_t next_worker = 1;
  std::uint64_t next_conflict = 1;
  std::uint64_t next_enqueue = 1;

  std::map<ProjectId, Project> projects;
  std::map<FunctionId, FunctionSpec> functions;
  std::map<BehaviorId, Behavior> behaviors;
  std::map<TestId, TestArtifact> tests;
  std::map<MicrotaskId, Microtask> microtasks;
  std::map<WorkerId, Worker> workers;
  std::map<ConflictId, Conflict> conflicts;

  // Derived index over microtasks in Queued state.
  std::set<QueueKey> queue;

  const Project& project(ProjectId id) const;
  const FunctionSpec& function(FunctionId id) const;
  FunctionSpec& function(FunctionId id);
  const Behavior& behavior(BehaviorId id) const;
  Behavior& behavior(BehaviorId id);
  const Microtask& microtask(MicrotaskId id) const;
  Microtask& microtask(MicrotaskId id);
  const Worker& worker(WorkerId id) const;
  Worker& worker(WorkerId id);
  const Conflict& conflict(ConflictId id) const;
  Conflict& conflict(ConflictId id);

  const TestArtifact* test_of(const Behavior& b) const;
  const FunctionSpec* find_function(ProjectId project,
                                    std::string_view name) const;
};

/// An assertion that participates in suite runs and conflict detection:
/// from a non-Retired behavior holding a test that is not under revision.
struct ActiveAssertion {
  AssertionRef ref;
  const Assertion* assertion = nullptr;
};

std::vector<ActiveAssertion> active_assertions(const State& state,
                                               FunctionId function);

/// Throws EmptyAssertions / ArityMismatch.
void validate_assertions(const FunctionSpec& function,
                         const std::vector<Assertion>& assertions);

/// Throws BadRequest for an empty statement and DuplicateBehavior when
/// another behavior of the function (other than `self`) has the same text.
void validate_statement(const State& state, const FunctionSpec& function,
                        const std::string& statement, BehaviorId self = {});

}  // namespace microflow
