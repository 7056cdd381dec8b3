#include "microflow/codec.hpp"

#include "microflow/errors.hpp"

namespace microflow {

namespace {

template <class T>
Value list_of(const std::vector<T>& items) {
  Value::List out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(to_value(item));
  return Value(std::move(out));
}

template <class T>
std::vector<T> decode_list(const Value& v) {
  std::vector<T> out;
  if (v.is_null()) return out;
  for (const auto& item : v.as_list()) out.push_back(from_value<T>(item));
  return out;
}

template <char P>
Value id_list(const std::vector<Id<P>>& ids) {
  Value::List out;
  for (auto id : ids) out.emplace_back(id.str());
  return Value(std::move(out));
}

template <char P>
std::vector<Id<P>> decode_ids(const Value& v) {
  std::vector<Id<P>> out;
  if (v.is_null()) return out;
  for (const auto& item : v.as_list()) out.push_back(id_from<P>(item));
  return out;
}

template <char P>
void put_opt(Value& obj, std::string_view key, const std::optional<Id<P>>& id) {
  if (id) obj[key] = id->str();
}

template <char P>
std::optional<Id<P>> opt_id(const Value& v) {
  if (v.is_null()) return std::nullopt;
  return id_from<P>(v);
}

template <char P>
Id<P> id_or_zero(const Value& v) {
  if (v.is_null()) return Id<P>{};
  return id_from<P>(v);
}

template <class Enum>
Enum enum_at(const Value& obj, std::string_view key) {
  return enum_from_string<Enum>(obj.at(key).as_string());
}

std::string string_or_empty(const Value& v) {
  return v.is_null() ? std::string() : v.as_string();
}

int int_or(const Value& v, int fallback) {
  return v.is_null() ? fallback : static_cast<int>(v.as_int());
}

template <class Map>
Value map_values(const Map& map) {
  Value::List out;
  for (const auto& [_, item] : map) out.push_back(to_value(item));
  return Value(std::move(out));
}

template <class Map, class T>
void decode_into(const Value& v, Map& map) {
  for (const auto& item : v.as_list()) {
    T decoded = from_value<T>(item);
    auto key = decoded.id;
    map.emplace(key, std::move(decoded));
  }
}

}  // namespace

std::vector<Value> value_list(const Value& v) {
  const auto& list = v.as_list();
  return {list.begin(), list.end()};
}

Value to_value(const std::vector<Value>& values) {
  return Value(Value::List(values.begin(), values.end()));
}

Value to_value(const Field& v) {
  Value out = Value::object();
  out["name"] = v.name;
  out["type"] = to_string(v.type);
  return out;
}

Value to_value(const std::vector<Field>& v) { return list_of(v); }

template <>
Field from_value<Field>(const Value& v) {
  Field f;
  f.name = v.at("name").as_string();
  f.type = enum_at<ScalarType>(v, "type");
  return f;
}

template <>
std::vector<Field> from_value<std::vector<Field>>(const Value& v) {
  return decode_list<Field>(v);
}

Value to_value(const EndpointDescription& v) {
  Value out = Value::object();
  out["method"] = to_string(v.method);
  out["path"] = v.path;
  out["name"] = v.name;
  out["description"] = v.description;
  out["requestSchema"] = list_of(v.request_schema);
  out["responseSchema"] = list_of(v.response_schema);
  return out;
}

template <>
EndpointDescription from_value<EndpointDescription>(const Value& v) {
  EndpointDescription e;
  e.method = enum_at<HttpMethod>(v, "method");
  e.path = v.at("path").as_string();
  e.name = v.at("name").as_string();
  e.description = string_or_empty(v.get("description"));
  e.request_schema = decode_list<Field>(v.get("requestSchema"));
  e.response_schema = decode_list<Field>(v.get("responseSchema"));
  return e;
}

Value to_value(const ProjectSpec& v) {
  Value out = Value::object();
  out["name"] = v.name;
  out["endpoints"] = list_of(v.endpoints);
  return out;
}

template <>
ProjectSpec from_value<ProjectSpec>(const Value& v) {
  ProjectSpec s;
  s.name = string_or_empty(v.get("name"));
  s.endpoints = decode_list<EndpointDescription>(v.get("endpoints"));
  return s;
}

Value to_value(const Assertion& v) {
  Value out = Value::object();
  out["args"] = to_value(v.args);
  out["expected"] = v.expected;
  return out;
}

Value to_value(const std::vector<Assertion>& v) { return list_of(v); }

template <>
Assertion from_value<Assertion>(const Value& v) {
  Assertion a;
  a.args = value_list(v.at("args"));
  a.expected = v.at("expected");
  return a;
}

template <>
std::vector<Assertion> from_value<std::vector<Assertion>>(const Value& v) {
  return decode_list<Assertion>(v);
}

Value to_value(const PseudoCall& v) {
  Value out = Value::object();
  out["name"] = v.name;
  out["params"] = list_of(v.params);
  out["returnType"] = to_string(v.return_type);
  out["description"] = v.description;
  return out;
}

template <>
PseudoCall from_value<PseudoCall>(const Value& v) {
  PseudoCall p;
  p.name = v.at("name").as_string();
  p.params = decode_list<Field>(v.get("params"));
  p.return_type = enum_at<ScalarType>(v, "returnType");
  p.description = string_or_empty(v.get("description"));
  return p;
}

Value to_value(const Table& v) {
  Value out = Value::object();
  Value::List entries;
  for (const auto& [key, result] : v.entries) {
    Value entry = Value::object();
    entry["args"] = parse_json(key);
    entry["value"] = result;
    entries.push_back(std::move(entry));
  }
  out["entries"] = Value(std::move(entries));
  out["default"] = v.default_value;
  return out;
}

template <>
Table from_value<Table>(const Value& v) {
  Table t;
  t.default_value = v.get("default");
  const Value& entries = v.get("entries");
  if (!entries.is_null()) {
    for (const auto& entry : entries.as_list()) {
      t.set(value_list(entry.at("args")), entry.at("value"));
    }
  }
  return t;
}

Value to_value(const Implementation& v) {
  Value out = Value::object();
  if (v.function) out["function"] = v.function.str();
  out["kind"] = to_string(v.kind);
  if (v.table) out["table"] = to_value(*v.table);
  if (v.source) out["source"] = *v.source;
  out["languageTag"] = v.language_tag;
  out["version"] = v.version;
  out["pseudoCalls"] = list_of(v.pseudo_calls);
  if (v.author) out["author"] = v.author.str();
  return out;
}

template <>
Implementation from_value<Implementation>(const Value& v) {
  Implementation impl;
  impl.function = id_or_zero<'f'>(v.get("function"));
  impl.kind = enum_at<ImplementationKind>(v, "kind");
  if (!v.get("table").is_null()) impl.table = from_value<Table>(v.at("table"));
  if (!v.get("source").is_null()) impl.source = v.at("source").as_string();
  impl.language_tag = v.get("languageTag").is_null()
                          ? std::string(impl.kind == ImplementationKind::Table
                                            ? "table"
                                            : "")
                          : v.at("languageTag").as_string();
  impl.version = int_or(v.get("version"), 0);
  impl.pseudo_calls = decode_list<PseudoCall>(v.get("pseudoCalls"));
  impl.author = id_or_zero<'w'>(v.get("author"));
  return impl;
}

Value to_value(const FailureEntry& v) {
  Value out = Value::object();
  out["behaviorId"] = v.behavior.str();
  out["assertionIndex"] = static_cast<std::uint64_t>(v.assertion_index);
  out["args"] = to_value(v.args);
  out["expected"] = v.expected;
  out["status"] = to_string(v.status);
  if (v.actual) out["actual"] = *v.actual;
  if (v.error) out["error"] = *v.error;
  return out;
}

template <>
FailureEntry from_value<FailureEntry>(const Value& v) {
  FailureEntry e;
  e.behavior = id_from<'b'>(v.at("behaviorId"));
  e.assertion_index = static_cast<std::size_t>(v.at("assertionIndex").as_int());
  e.args = value_list(v.at("args"));
  e.expected = v.at("expected");
  e.status = enum_at<CaseStatus>(v, "status");
  if (v.contains("actual")) e.actual = v.at("actual");
  if (v.contains("error")) e.error = v.at("error").as_string();
  return e;
}

Value to_value(const FailureReport& v) {
  Value out = Value::object();
  out["functionId"] = v.function.str();
  out["implementationVersion"] = v.implementation_version;
  out["failures"] = list_of(v.failures);
  return out;
}

template <>
FailureReport from_value<FailureReport>(const Value& v) {
  FailureReport r;
  r.function = id_from<'f'>(v.at("functionId"));
  r.implementation_version = static_cast<int>(v.at("implementationVersion").as_int());
  r.failures = decode_list<FailureEntry>(v.at("failures"));
  return r;
}

Value to_value(const FunctionSpec& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["projectId"] = v.project.str();
  out["name"] = v.name;
  out["params"] = list_of(v.params);
  out["returnType"] = to_string(v.return_type);
  out["description"] = v.description;
  Value origin = Value::object();
  if (v.origin.endpoint_root) {
    origin["endpoint"] = v.origin.endpoint_name;
  } else {
    origin["pseudoCallOf"] = v.origin.spawned_by.str();
  }
  out["origin"] = std::move(origin);
  out["state"] = to_string(v.state);
  out["behaviorIds"] = id_list(v.behaviors);
  out["noMoreDeclaredBy"] = id_list(std::vector<WorkerId>(
      v.no_more_declared_by.begin(), v.no_more_declared_by.end()));
  out["identifyClosed"] = v.identify_closed;
  if (v.implementation) out["implementation"] = to_value(*v.implementation);
  if (v.open_failure) out["openFailure"] = to_value(*v.open_failure);
  return out;
}

template <>
FunctionSpec from_value<FunctionSpec>(const Value& v) {
  FunctionSpec f;
  f.id = id_from<'f'>(v.at("id"));
  f.project = id_from<'p'>(v.at("projectId"));
  f.name = v.at("name").as_string();
  f.params = decode_list<Field>(v.get("params"));
  f.return_type = enum_at<ScalarType>(v, "returnType");
  f.description = string_or_empty(v.get("description"));
  const Value& origin = v.at("origin");
  if (origin.contains("pseudoCallOf")) {
    f.origin.endpoint_root = false;
    f.origin.spawned_by = id_from<'f'>(origin.at("pseudoCallOf"));
  } else {
    f.origin.endpoint_root = true;
    f.origin.endpoint_name = origin.at("endpoint").as_string();
  }
  f.state = enum_at<FunctionState>(v, "state");
  f.behaviors = decode_ids<'b'>(v.get("behaviorIds"));
  for (auto w : decode_ids<'w'>(v.get("noMoreDeclaredBy"))) {
    f.no_more_declared_by.insert(w);
  }
  f.identify_closed = v.get("identifyClosed").is_bool() &&
                      v.get("identifyClosed").as_bool();
  if (v.contains("implementation")) {
    f.implementation = from_value<Implementation>(v.at("implementation"));
  }
  if (v.contains("openFailure")) {
    f.open_failure = from_value<FailureReport>(v.at("openFailure"));
  }
  return f;
}

Value to_value(const Behavior& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["functionId"] = v.function.str();
  out["statement"] = v.statement;
  out["state"] = to_string(v.state);
  put_opt(out, "testId", v.test);
  if (v.author) out["author"] = v.author.str();
  out["revisionPending"] = v.revision_pending;
  return out;
}

template <>
Behavior from_value<Behavior>(const Value& v) {
  Behavior b;
  b.id = id_from<'b'>(v.at("id"));
  b.function = id_from<'f'>(v.at("functionId"));
  b.statement = v.at("statement").as_string();
  b.state = enum_at<BehaviorState>(v, "state");
  b.test = opt_id<'t'>(v.get("testId"));
  b.author = id_or_zero<'w'>(v.get("author"));
  b.revision_pending = v.get("revisionPending").is_bool() &&
                       v.get("revisionPending").as_bool();
  return b;
}

Value to_value(const TestArtifact& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["behaviorId"] = v.behavior.str();
  out["assertions"] = list_of(v.assertions);
  if (v.author) out["author"] = v.author.str();
  out["version"] = v.version;
  return out;
}

template <>
TestArtifact from_value<TestArtifact>(const Value& v) {
  TestArtifact t;
  t.id = id_from<'t'>(v.at("id"));
  t.behavior = id_from<'b'>(v.at("behaviorId"));
  t.assertions = decode_list<Assertion>(v.at("assertions"));
  t.author = id_or_zero<'w'>(v.get("author"));
  t.version = static_cast<int>(v.at("version").as_int());
  return t;
}

Value to_value(const Microtask& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["projectId"] = v.project.str();
  out["kind"] = to_string(v.kind);
  out["functionId"] = v.function.str();
  put_opt(out, "behaviorId", v.behavior);
  put_opt(out, "conflictId", v.conflict);
  out["revision"] = v.revision;
  out["state"] = to_string(v.state);
  put_opt(out, "assignee", v.assignee);
  if (v.lease_expiry) out["leaseExpiry"] = *v.lease_expiry;
  out["attempt"] = v.attempt;
  out["skipCount"] = v.skip_count;
  out["enqueueSeq"] = v.enqueue_seq;
  out["flagged"] = v.flagged;
  out["stuck"] = v.stuck;
  out["createdAt"] = v.created_at;
  if (v.assigned_at) out["assignedAt"] = *v.assigned_at;
  if (v.completed_at) out["completedAt"] = *v.completed_at;
  return out;
}

template <>
Microtask from_value<Microtask>(const Value& v) {
  Microtask m;
  m.id = id_from<'m'>(v.at("id"));
  m.project = id_from<'p'>(v.at("projectId"));
  m.kind = enum_at<MicrotaskKind>(v, "kind");
  m.function = id_from<'f'>(v.at("functionId"));
  m.behavior = opt_id<'b'>(v.get("behaviorId"));
  m.conflict = opt_id<'c'>(v.get("conflictId"));
  m.revision = v.get("revision").is_bool() && v.get("revision").as_bool();
  m.state = enum_at<MicrotaskState>(v, "state");
  m.assignee = opt_id<'w'>(v.get("assignee"));
  if (v.contains("leaseExpiry")) m.lease_expiry = v.at("leaseExpiry").as_int();
  m.attempt = int_or(v.get("attempt"), 1);
  m.skip_count = int_or(v.get("skipCount"), 0);
  m.enqueue_seq = static_cast<std::uint64_t>(v.at("enqueueSeq").as_int());
  m.flagged = v.get("flagged").is_bool() && v.get("flagged").as_bool();
  m.stuck = v.get("stuck").is_bool() && v.get("stuck").as_bool();
  m.created_at = v.at("createdAt").as_int();
  if (v.contains("assignedAt")) m.assigned_at = v.at("assignedAt").as_int();
  if (v.contains("completedAt")) m.completed_at = v.at("completedAt").as_int();
  return m;
}

Value to_value(const Worker& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["handle"] = v.handle;
  put_opt(out, "assignedMicrotaskId", v.assigned);
  out["completedCount"] = v.completed_count;
  out["skipCount"] = v.skip_count;
  return out;
}

template <>
Worker from_value<Worker>(const Value& v) {
  Worker w;
  w.id = id_from<'w'>(v.at("id"));
  w.handle = string_or_empty(v.get("handle"));
  w.assigned = opt_id<'m'>(v.get("assignedMicrotaskId"));
  w.completed_count = int_or(v.get("completedCount"), 0);
  w.skip_count = int_or(v.get("skipCount"), 0);
  return w;
}

namespace {

Value ref_value(const AssertionRef& r) {
  Value out = Value::object();
  out["behaviorId"] = r.behavior.str();
  out["assertionIndex"] = static_cast<std::uint64_t>(r.index);
  return out;
}

AssertionRef ref_from(const Value& v) {
  return {id_from<'b'>(v.at("behaviorId")),
          static_cast<std::size_t>(v.at("assertionIndex").as_int())};
}

}  // namespace

Value to_value(const Conflict& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["functionId"] = v.function.str();
  out["a"] = ref_value(v.a);
  out["b"] = ref_value(v.b);
  out["args"] = to_value(v.args);
  out["expectedA"] = v.expected_a;
  out["expectedB"] = v.expected_b;
  out["state"] = to_string(v.state);
  put_opt(out, "ticket", v.ticket);
  return out;
}

template <>
Conflict from_value<Conflict>(const Value& v) {
  Conflict c;
  c.id = id_from<'c'>(v.at("id"));
  c.function = id_from<'f'>(v.at("functionId"));
  c.a = ref_from(v.at("a"));
  c.b = ref_from(v.at("b"));
  c.args = value_list(v.at("args"));
  c.expected_a = v.at("expectedA");
  c.expected_b = v.at("expectedB");
  c.state = enum_at<ConflictState>(v, "state");
  c.ticket = opt_id<'m'>(v.get("ticket"));
  return c;
}

Value to_value(const Project& v) {
  Value out = Value::object();
  out["id"] = v.id.str();
  out["spec"] = to_value(v.spec);
  out["functionIds"] = id_list(v.functions);
  out["state"] = to_string(v.state);
  return out;
}

template <>
Project from_value<Project>(const Value& v) {
  Project p;
  p.id = id_from<'p'>(v.at("id"));
  p.spec = from_value<ProjectSpec>(v.at("spec"));
  p.functions = decode_ids<'f'>(v.get("functionIds"));
  p.state = enum_at<ProjectState>(v, "state");
  return p;
}

Value to_value(const State& v) {
  Value out = Value::object();
  out["lastSeq"] = v.last_seq;
  Value next = Value::object();
  next["project"] = v.next_project;
  next["function"] = v.next_function;
  next["behavior"] = v.next_behavior;
  next["test"] = v.next_test;
  next["microtask"] = v.next_microtask;
  next["worker"] = v.next_worker;
  next["conflict"] = v.next_conflict;
  next["enqueue"] = v.next_enqueue;
  out["next"] = std::move(next);
  out["projects"] = map_values(v.projects);
  out["functions"] = map_values(v.functions);
  out["behaviors"] = map_values(v.behaviors);
  out["tests"] = map_values(v.tests);
  out["microtasks"] = map_values(v.microtasks);
  out["workers"] = map_values(v.workers);
  out["conflicts"] = map_values(v.conflicts);
  return out;
}

template <>
State from_value<State>(const Value& v) {
  State s;
  s.last_seq = v.at("lastSeq").as_int();
  const Value& next = v.at("next");
  auto counter = [&](const char* key) {
    return static_cast<std::uint64_t>(next.at(key).as_int());
  };
  s.next_project = counter("project");
  s.next_function = counter("function");
  s.next_behavior = counter("behavior");
  s.next_test = counter("test");
  s.next_microtask = counter("microtask");
  s.next_worker = counter("worker");
  s.next_conflict = counter("conflict");
  s.next_enqueue = counter("enqueue");
  decode_into<decltype(s.projects), Project>(v.at("projects"), s.projects);
  decode_into<decltype(s.functions), FunctionSpec>(v.at("functions"), s.functions);
  decode_into<decltype(s.behaviors), Behavior>(v.at("behaviors"), s.behaviors);
  decode_into<decltype(s.tests), TestArtifact>(v.at("tests"), s.tests);
  decode_into<decltype(s.microtasks), Microtask>(v.at("microtasks"), s.microtasks);
  decode_into<decltype(s.workers), Worker>(v.at("workers"), s.workers);
  decode_into<decltype(s.conflicts), Conflict>(v.at("conflicts"), s.conflicts);
  rebuild_queue(s);
  return s;
}

void rebuild_queue(State& state) {
  state.queue.clear();
  for (const auto& [id, m] : state.microtasks) {
    if (m.state == MicrotaskState::Queued) {
      state.queue.emplace(priority_class(m.kind), m.enqueue_seq, id);
    }
  }
}

}  // namespace microflow
