#include "microflow/model.hpp"

#include <array>
#include <charconv>

#include "microflow/errors.hpp"

namespace microflow {

namespace {

template <class Enum, std::size_t N>
struct EnumNames {
  std::array<std::string_view, N> names;

  std::string_view name(Enum v) const {
    return names.at(static_cast<std::size_t>(v));
  }
  Enum parse(std::string_view text, const char* what) const {
    for (std::size_t i = 0; i < N; ++i) {
      if (names[i] == text) return static_cast<Enum>(i);
    }
    fail(ErrorCode::BadRequest,
         std::string("unknown ") + what + " '" + std::string(text) + "'");
  }
};

constexpr EnumNames<HttpMethod, 4> kMethods{{"GET", "POST", "PUT", "DELETE"}};
constexpr EnumNames<ScalarType, 5> kScalars{
    {"string", "number", "boolean", "list", "object"}};
constexpr EnumNames<FunctionState, 3> kFunctionStates{
    {"Specified", "InProgress", "Complete"}};
constexpr EnumNames<BehaviorState, 5> kBehaviorStates{
    {"Identified", "Tested", "Passing", "Conflicted", "Retired"}};
constexpr EnumNames<MicrotaskKind, 5> kKinds{
    {"IdentifyBehavior", "WriteTest", "ImplementBehavior", "DebugFailure",
     "ResolveConflict"}};
constexpr EnumNames<MicrotaskState, 6> kMicrotaskStates{
    {"Queued", "Assigned", "Submitted", "Completed", "Skipped", "TimedOut"}};
constexpr EnumNames<ConflictState, 2> kConflictStates{{"Open", "Resolved"}};
constexpr EnumNames<ProjectState, 2> kProjectStates{{"Active", "Complete"}};
constexpr EnumNames<ImplementationKind, 2> kImplKinds{{"table", "source"}};
constexpr EnumNames<CaseStatus, 4> kCaseStatuses{
    {"Pass", "Fail", "Error", "Timeout"}};

template <class Map, class Key>
auto& lookup(Map& map, const Key& id, const char* what) {
  auto it = map.find(id);
  if (it == map.end()) {
    fail(ErrorCode::NotFound, std::string("unknown ") + what + " " + id.str());
  }
  return it->second;
}

}  // namespace

template <char Prefix>
Id<Prefix> Id<Prefix>::parse(std::string_view text) {
  Id id;
  if (text.size() < 2 || text.front() != Prefix) {
    fail(ErrorCode::BadRequest, "malformed id '" + std::string(text) + "'");
  }
  auto digits = text.substr(1);
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), id.value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() ||
      id.value == 0) {
    fail(ErrorCode::BadRequest, "malformed id '" + std::string(text) + "'");
  }
  return id;
}

template struct Id<'p'>;
template struct Id<'f'>;
template struct Id<'b'>;
template struct Id<'t'>;
template struct Id<'m'>;
template struct Id<'w'>;
template struct Id<'c'>;

std::string_view to_string(HttpMethod v) { return kMethods.name(v); }
std::string_view to_string(ScalarType v) { return kScalars.name(v); }
std::string_view to_string(FunctionState v) { return kFunctionStates.name(v); }
std::string_view to_string(BehaviorState v) { return kBehaviorStates.name(v); }
std::string_view to_string(MicrotaskKind v) { return kKinds.name(v); }
std::string_view to_string(MicrotaskState v) { return kMicrotaskStates.name(v); }
std::string_view to_string(ConflictState v) { return kConflictStates.name(v); }
std::string_view to_string(ProjectState v) { return kProjectStates.name(v); }
std::string_view to_string(ImplementationKind v) { return kImplKinds.name(v); }
std::string_view to_string(CaseStatus v) { return kCaseStatuses.name(v); }

template <>
HttpMethod enum_from_string<HttpMethod>(std::string_view t) {
  return kMethods.parse(t, "method");
}
template <>
ScalarType enum_from_string<ScalarType>(std::string_view t) {
  return kScalars.parse(t, "scalar type");
}
template <>
FunctionState enum_from_string<FunctionState>(std::string_view t) {
  return kFunctionStates.parse(t, "function state");
}
template <>
BehaviorState enum_from_string<BehaviorState>(std::string_view t) {
  return kBehaviorStates.parse(t, "behavior state");
}
template <>
MicrotaskKind enum_from_string<MicrotaskKind>(std::string_view t) {
  return kKinds.parse(t, "microtask kind");
}
template <>
MicrotaskState enum_from_string<MicrotaskState>(std::string_view t) {
  return kMicrotaskStates.parse(t, "microtask state");
}
template <>
ConflictState enum_from_string<ConflictState>(std::string_view t) {
  return kConflictStates.parse(t, "conflict state");
}
template <>
ProjectState enum_from_string<ProjectState>(std::string_view t) {
  return kProjectStates.parse(t, "project state");
}
template <>
ImplementationKind enum_from_string<ImplementationKind>(std::string_view t) {
  return kImplKinds.parse(t, "implementation kind");
}
template <>
CaseStatus enum_from_string<CaseStatus>(std::string_view t) {
  return kCaseStatuses.parse(t, "case status");
}

std::string canonical_args(const std::vector<Value>& args) {
  return canonicalize(Value(Value::List(args.begin(), args.end())));
}

void Table::set(const std::vector<Value>& args, Value result) {
  entries[canonical_args(args)] = std::move(result);
}

const Value& Table::lookup(const std::vector<Value>& args) const {
  auto it = entries.find(canonical_args(args));
  return it == entries.end() ? default_value : it->second;
}

int priority_class(MicrotaskKind kind) {
  switch (kind) {
    case MicrotaskKind::DebugFailure: return 0;
    case MicrotaskKind::ResolveConflict: return 1;
    case MicrotaskKind::ImplementBehavior: return 2;
    case MicrotaskKind::WriteTest: return 3;
    case MicrotaskKind::IdentifyBehavior: return 4;
  }
  return 5;
}

const Project& State::project(ProjectId id) const {
  return lookup(projects, id, "project");
}
const FunctionSpec& State::function(FunctionId id) const {
  return lookup(functions, id, "function");
}
FunctionSpec& State::function(FunctionId id) {
  return lookup(functions, id, "function");
}
const Behavior& State::behavior(BehaviorId id) const {
  return lookup(behaviors, id, "behavior");
}
Behavior& State::behavior(BehaviorId id) {
  return lookup(behaviors, id, "behavior");
}
const Microtask& State::microtask(MicrotaskId id) const {
  return lookup(microtasks, id, "microtask");
}
Microtask& State::microtask(MicrotaskId id) {
  return lookup(microtasks, id, "microtask");
}
const Worker& State::worker(WorkerId id) const {
  auto it = workers.find(id);
  if (it == workers.end()) fail(ErrorCode::UnknownWorker, id.str());
  return it->second;
}
Worker& State::worker(WorkerId id) {
  auto it = workers.find(id);
  if (it == workers.end()) fail(ErrorCode::UnknownWorker, id.str());
  return it->second;
}
const Conflict& State::conflict(ConflictId id) const {
  auto it = conflicts.find(id);
  if (it == conflicts.end()) fail(ErrorCode::UnknownConflict, id.str());
  return it->second;
}
Conflict& State::conflict(ConflictId id) {
  auto it = conflicts.find(id);
  if (it == conflicts.end()) fail(ErrorCode::UnknownConflict, id.str());
  return it->second;
}

const TestArtifact* State::test_of(const Behavior& b) const {
  if (!b.test) return nullptr;
  auto it = tests.find(*b.test);
  return it == tests.end() ? nullptr : &it->second;
}

const FunctionSpec* State::find_function(ProjectId project,
                                         std::string_view name) const {
  auto pit = projects.find(project);
  if (pit == projects.end()) return nullptr;
  for (FunctionId id : pit->second.functions) {
    const auto& f = functions.at(id);
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<ActiveAssertion> active_assertions(const State& state,
                                               FunctionId function) {
  std::vector<ActiveAssertion> out;
  for (BehaviorId bid : state.function(function).behaviors) {
    const Behavior& b = state.behavior(bid);
    if (b.state == BehaviorState::Retired || b.revision_pending) continue;
    const TestArtifact* test = state.test_of(b);
    if (test == nullptr) continue;
    for (std::size_t i = 0; i < test->assertions.size(); ++i) {
      out.push_back({{bid, i}, &test->assertions[i]});
    }
  }
  return out;
}

void validate_assertions(const FunctionSpec& function,
                         const std::vector<Assertion>& assertions) {
  if (assertions.empty()) {
    fail(ErrorCode::EmptyAssertions, "a test needs at least one assertion");
  }
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    if (assertions[i].args.size() != function.params.size()) {
      fail(ErrorCode::ArityMismatch,
           "assertion " + std::to_string(i) + " has " +
               std::to_string(assertions[i].args.size()) + " args; " +
               function.name + " takes " + std::to_string(function.params.size()));
    }
  }
}

void validate_statement(const State& state, const FunctionSpec& function,
                        const std::string& statement, BehaviorId self) {
  if (statement.empty()) fail(ErrorCode::BadRequest, "empty behavior statement");
  for (BehaviorId id : function.behaviors) {
    if (id != self && state.behavior(id).statement == statement) {
      fail(ErrorCode::DuplicateBehavior, "behavior already exists: " + statement);
    }
  }
}

}  // namespace microflow
