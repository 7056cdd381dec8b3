#include "microflow/engine.hpp"

#include <algorithm>
#include <set>

#include "microflow/codec.hpp"
#include "microflow/conflicts.hpp"
#include "microflow/errors.hpp"

namespace microflow {

namespace {

bool live(const Microtask& m) { return m.state != MicrotaskState::Completed; }

Value project_payload(ProjectId project) {
  Value p = Value::object();
  p["projectId"] = project.str();
  return p;
}

ScalarType schema_type(const Value& v, ErrorCode code) {
  if (!v.is_string()) fail(code, "field type must be a string");
  try {
    return enum_from_string<ScalarType>(v.as_string());
  } catch (const DomainError&) {
    fail(code, "unknown scalar type '" + v.as_string() + "'");
  }
}

std::vector<Field> parse_fields(const Value& v, ErrorCode code) {
  std::vector<Field> out;
  if (v.is_null()) return out;
  if (!v.is_list()) fail(code, "schema must be a list");
  for (const auto& item : v.as_list()) {
    if (!item.is_object() || !item.get("name").is_string() ||
        item.at("name").as_string().empty()) {
      fail(code, "schema field needs a non-empty name");
    }
    out.push_back({item.at("name").as_string(), schema_type(item.get("type"), code)});
  }
  return out;
}

std::vector<PseudoCall> parse_pseudo_calls(const Value& v) {
  std::vector<PseudoCall> out;
  if (v.is_null()) return out;
  for (const auto& item : v.as_list()) {
    PseudoCall call;
    call.name = item.at("name").as_string();
    if (call.name.empty()) fail(ErrorCode::BadRequest, "pseudo-call needs a name");
    call.params = parse_fields(item.get("params"), ErrorCode::UnknownPseudoCallType);
    call.return_type = schema_type(item.get("returnType"), ErrorCode::UnknownPseudoCallType);
    if (item.get("description").is_string()) {
      call.description = item.at("description").as_string();
    }
    out.push_back(std::move(call));
  }
  return out;
}

Implementation parse_implementation(const Value& v) {
  if (!v.is_object()) fail(ErrorCode::BadRequest, "implementation must be an object");
  Implementation impl = from_value<Implementation>(v);
  if (impl.kind == ImplementationKind::Table) {
    if (!impl.table) fail(ErrorCode::BadRequest, "table implementation needs a table");
    impl.source.reset();
    impl.language_tag = "table";
  } else {
    if (!impl.source) fail(ErrorCode::BadRequest, "source implementation needs source");
    if (impl.language_tag.empty() || impl.language_tag == "table") {
      fail(ErrorCode::BadRequest, "source implementation needs a languageTag");
    }
    impl.table.reset();
  }
  return impl;
}

std::vector<Assertion> parse_assertions(const Value& v) {
  if (!v.is_list()) fail(ErrorCode::BadRequest, "assertions must be a list");
  return from_value<std::vector<Assertion>>(v);
}

// Per-submission context shared by the rule handlers.
struct Rules {
  Txn& txn;
  const EngineConfig& config;
  RunnerAdapter* runner;
  const Microtask task;  // snapshot at submission time
  WorkerId worker;
  SubmissionResult result;

  const State& s() const { return txn.state(); }
  ProjectId project() const { return task.project; }

  MicrotaskId spawn(MicrotaskKind kind, FunctionId f, std::optional<BehaviorId> b = {},
                    bool revision = false, bool reopen = false) {
    MicrotaskId id = scheduler::enqueue(txn, project(), kind, f, b, std::nullopt,
                                        revision, reopen);
    result.spawned.push_back(id);
    return id;
  }

  void record_spawned_since(std::uint64_t first) {
    for (std::uint64_t i = first; i < s().next_microtask; ++i) {
      MicrotaskId id{i};
      if (std::find(result.spawned.begin(), result.spawned.end(), id) ==
          result.spawned.end()) {
        result.spawned.push_back(id);
      }
    }
  }

  bool other_live(FunctionId f, MicrotaskKind kind, bool queued_only) const {
    for (const auto& [id, m] : s().microtasks) {
      if (id == task.id || m.function != f || m.kind != kind) continue;
      if (queued_only ? m.state == MicrotaskState::Queued : live(m)) return true;
    }
    return false;
  }

  // Queues ImplementBehavior unless one is already waiting for the function.
  void ensure_implement(FunctionId f, std::optional<BehaviorId> target) {
    if (other_live(f, MicrotaskKind::ImplementBehavior, true)) return;
    if (!target) {
      for (BehaviorId bid : s().function(f).behaviors) {
        if (s().behavior(bid).state == BehaviorState::Tested) {
          target = bid;
          break;
        }
      }
    }
    spawn(MicrotaskKind::ImplementBehavior, f, target);
  }

  bool any_tested(FunctionId f) const {
    const auto& ids = s().function(f).behaviors;
    return std::any_of(ids.begin(), ids.end(), [&](BehaviorId bid) {
      return s().behavior(bid).state == BehaviorState::Tested;
    });
  }

  // Runs the suite over the active assertions and records it. Returns
  // whether any case failed.
  bool run_and_record(FunctionId f) {
    const FunctionSpec& fn = s().function(f);
    if (!fn.implementation) return false;
    auto cases = suite_cases(s(), f);
    SuiteReport report =
        fn.implementation->kind == ImplementationKind::Source && runner != nullptr
            ? run_suite(*fn.implementation, fn.name, cases, config.harness, runner)
            : run_suite(*fn.implementation, fn.name, cases, config.harness);

    std::map<BehaviorId, bool> all_pass;
    for (const auto& r : report.results) {
      auto [it, _] = all_pass.emplace(r.ref.behavior, true);
      it->second = it->second && r.status == CaseStatus::Pass;
    }
    Value::List passing;
    for (const auto& [bid, ok] : all_pass) {
      if (ok && s().behavior(bid).state == BehaviorState::Tested) {
        passing.push_back(Value(bid.str()));
      }
    }

    Value p = project_payload(project());
    p["functionId"] = f.str();
    Value rendered = to_value(report);
    rendered.as_object().erase("durationMillis");
    p["report"] = std::move(rendered);
    auto failure = build_failure_report(report);
    if (failure) p["failureReport"] = to_value(*failure);
    p["passing"] = Value(std::move(passing));
    txn.emit(EventKind::SuiteRan, std::move(p));
    return failure.has_value();
  }

  void spawn_debug_if_needed(FunctionId f) {
    if (other_live(f, MicrotaskKind::DebugFailure, false)) return;
    spawn(MicrotaskKind::DebugFailure, f);
  }

  void declare_pseudo_calls(FunctionId caller, const std::vector<PseudoCall>& calls) {
    for (const auto& call : calls) {
      if (const FunctionSpec* existing = s().find_function(project(), call.name)) {
        if (existing->params == call.params && existing->return_type == call.return_type) {
          continue;
        }
        fail(ErrorCode::DuplicateFunctionName,
             "function " + call.name + " already exists with a different signature");
      }
      FunctionSpec f;
      f.id = FunctionId{s().next_function};
      f.project = project();
      f.name = call.name;
      f.params = call.params;
      f.return_type = call.return_type;
      f.description = call.description;
      f.origin.endpoint_root = false;
      f.origin.spawned_by = caller;
      Value p = project_payload(project());
      p["function"] = to_value(f);
      txn.emit(EventKind::FunctionSpecAdded, std::move(p));
      spawn(MicrotaskKind::IdentifyBehavior, f.id);
    }
  }

  void store_implementation(FunctionId f, Implementation impl) {
    const FunctionSpec& fn = s().function(f);
    impl.function = f;
    impl.version = fn.implementation ? fn.implementation->version + 1 : 1;
    impl.author = worker;
    Value p = project_payload(project());
    p["implementation"] = to_value(impl);
    txn.emit(EventKind::ImplementationStored, std::move(p));
  }

  void on_identify(const Value& body) {
    FunctionId f = task.function;
    const bool no_more = body.get("noMoreBehaviors").is_bool() &&
                         body.at("noMoreBehaviors").as_bool();
    const bool has_statement = body.get("statement").is_string();
    if (no_more == has_statement) {
      fail(ErrorCode::BadRequest, "identify needs exactly one of statement, noMoreBehaviors");
    }
    const FunctionSpec& fn = s().function(f);
    if (has_statement) {
      const std::string& statement = body.at("statement").as_string();
      validate_statement(s(), fn, statement);
      Behavior b;
      b.id = BehaviorId{s().next_behavior};
      b.function = f;
      b.statement = statement;
      b.author = worker;
      Value p = project_payload(project());
      p["behavior"] = to_value(b);
      txn.emit(EventKind::BehaviorAdded, std::move(p));
      spawn(MicrotaskKind::WriteTest, f, b.id);
      spawn(MicrotaskKind::IdentifyBehavior, f);
      return;
    }
    const auto& ids = fn.behaviors;
    bool any = std::any_of(ids.begin(), ids.end(), [&](BehaviorId bid) {
      return s().behavior(bid).state != BehaviorState::Retired;
    });
    if (!any) fail(ErrorCode::NoBehaviors, fn.name + " has no behaviors yet");
    if (fn.no_more_declared_by.count(worker) != 0) {
      fail(ErrorCode::AlreadyDeclared, worker.str() + " already declared " + fn.name);
    }
    bool closed = static_cast<int>(fn.no_more_declarations() + 1) >=
                  config.scheduler.identify_quorum;
    Value p = project_payload(project());
    p["functionId"] = f.str();
    p["workerId"] = worker.str();
    p["closed"] = closed;
    txn.emit(EventKind::NoMoreBehaviorsDeclared, std::move(p));
    if (!closed) spawn(MicrotaskKind::IdentifyBehavior, f);
  }

  void on_test(const Value& body) {
    FunctionId f = task.function;
    BehaviorId bid = *task.behavior;
    auto assertions = parse_assertions(body.get("assertions"));
    validate_assertions(s().function(f), assertions);
    const Behavior& b = s().behavior(bid);
    TestArtifact t;
    t.behavior = bid;
    t.assertions = std::move(assertions);
    t.author = worker;
    if (const TestArtifact* prior = s().test_of(b)) {
      t.id = prior->id;
      t.version = prior->version + 1;
    } else {
      t.id = TestId{s().next_test};
    }
    Value p = project_payload(project());
    p["test"] = to_value(t);
    txn.emit(EventKind::TestStored, std::move(p));

    auto first = s().next_microtask;
    auto opened = conflicts::reconcile(txn, f);
    record_spawned_since(first);
    bool involved = std::any_of(opened.begin(), opened.end(), [&](ConflictId c) {
      const Conflict& conflict = s().conflict(c);
      return conflict.a.behavior == bid || conflict.b.behavior == bid;
    });
    if (!involved && s().behavior(bid).state == BehaviorState::Tested) {
      ensure_implement(f, bid);
    }
  }

  void on_implement(const Value& body) {
    FunctionId f = task.function;
    Implementation impl = parse_implementation(body.get("implementation"));
    impl.pseudo_calls = parse_pseudo_calls(body.get("pseudoCalls"));
    declare_pseudo_calls(f, impl.pseudo_calls);
    store_implementation(f, std::move(impl));
    if (run_and_record(f)) spawn_debug_if_needed(f);
  }

  // Returns true when the debug microtask must be requeued.
  bool on_debug(const Value& body) {
    FunctionId f = task.function;
    const FunctionSpec& fn = s().function(f);
    if (!fn.open_failure) fail(ErrorCode::NoOpenFailure, fn.name + " has no open failure");
    const std::string outcome =
        body.get("outcome").is_string() ? body.at("outcome").as_string() : "";

    if (outcome == "fix") {
      Implementation impl = parse_implementation(body.get("implementation"));
      impl.pseudo_calls = parse_pseudo_calls(body.get("pseudoCalls"));
      declare_pseudo_calls(f, impl.pseudo_calls);
      store_implementation(f, std::move(impl));
      return run_and_record(f);
    }
    if (outcome != "disputeTest" && outcome != "disputeBehavior") {
      fail(ErrorCode::BadRequest, "unknown debug outcome '" + outcome + "'");
    }

    BehaviorId bid = id_from<'b'>(body.at("behaviorId"));
    const auto& failures = fn.open_failure->failures;
    bool listed = std::any_of(failures.begin(), failures.end(),
                              [&](const FailureEntry& e) { return e.behavior == bid; });
    auto it = s().behaviors.find(bid);
    if (!listed || it == s().behaviors.end() || it->second.function != f ||
        it->second.state == BehaviorState::Retired ||
        it->second.state == BehaviorState::Conflicted) {
      fail(ErrorCode::UnknownBehavior, bid.str() + " is not in the open failure report");
    }

    if (outcome == "disputeTest") {
      // Revision n of a test is attempt n + 1 at producing it.
      const TestArtifact* t = s().test_of(it->second);
      int attempt = (t != nullptr ? t->version : 0) + 1;
      MicrotaskId id = scheduler::enqueue(txn, project(), MicrotaskKind::WriteTest, f, bid,
                                          std::nullopt, true, false, attempt,
                                          attempt > config.scheduler.max_attempts);
      result.spawned.push_back(id);
    } else {
      Value p = project_payload(project());
      p["functionId"] = f.str();
      p["behaviorId"] = bid.str();
      if (body.get("reason").is_string()) p["reason"] = body.at("reason");
      txn.emit(EventKind::BehaviorRetired, std::move(p));
      const FunctionSpec& after = s().function(f);
      bool remaining = std::any_of(
          after.behaviors.begin(), after.behaviors.end(), [&](BehaviorId other) {
            return s().behavior(other).state != BehaviorState::Retired;
          });
      if (!remaining && after.identify_closed) {
        spawn(MicrotaskKind::IdentifyBehavior, f, std::nullopt, false, true);
      }
    }
    if (run_and_record(f)) spawn_debug_if_needed(f);
    return false;
  }

  void on_resolve(const Value& body) {
    ConflictId cid = *task.conflict;
    conflicts::Resolution edits;
    if (!body.get("statements").is_null()) {
      for (const auto& [key, text] : body.at("statements").as_object()) {
        edits.statements[BehaviorId::parse(key)] = text.as_string();
      }
    }
    if (!body.get("tests").is_null()) {
      for (const auto& [key, list] : body.at("tests").as_object()) {
        edits.tests[BehaviorId::parse(key)] = parse_assertions(list);
      }
    }
    auto first = s().next_microtask;
    conflicts::apply_resolution(txn, cid, edits, worker);
    record_spawned_since(first);
    FunctionId f = task.function;
    if (!conflicts::has_open_conflict(s(), f) && any_tested(f)) {
      ensure_implement(f, std::nullopt);
    }
  }
};

MicrotaskKind body_kind(const Value& body) {
  if (!body.is_object() || !body.get("kind").is_string()) {
    fail(ErrorCode::BadRequest, "submission body needs a kind");
  }
  return enum_from_string<MicrotaskKind>(body.at("kind").as_string());
}

bool function_done(const State& s, const FunctionSpec& f,
                   const std::set<FunctionId>& busy) {
  if (f.state != FunctionState::InProgress) return false;
  if (!f.identify_closed || f.open_failure || !f.implementation) return false;
  if (busy.count(f.id) != 0) return false;
  bool any = false;
  for (BehaviorId bid : f.behaviors) {
    const Behavior& b = s.behavior(bid);
    if (b.state == BehaviorState::Retired) continue;
    if (b.state != BehaviorState::Passing || b.revision_pending) return false;
    any = true;
  }
  return any;
}

void check_completion(Txn& txn) {
  std::vector<ProjectId> active;
  for (const auto& [id, project] : txn.state().projects) {
    if (project.state == ProjectState::Active) active.push_back(id);
  }
  for (ProjectId pid : active) {
    std::set<FunctionId> busy;
    bool project_busy = false;
    for (const auto& [_, m] : txn.state().microtasks) {
      if (m.project == pid && live(m)) {
        busy.insert(m.function);
        project_busy = true;
      }
    }
    bool all_complete = true;
    for (FunctionId fid : txn.state().project(pid).functions) {
      const FunctionSpec& f = txn.state().function(fid);
      if (function_done(txn.state(), f, busy)) {
        Value p = project_payload(pid);
        p["functionId"] = fid.str();
        txn.emit(EventKind::FunctionCompleted, std::move(p));
      }
      all_complete = all_complete &&
                     txn.state().function(fid).state == FunctionState::Complete;
    }
    if (all_complete && !project_busy) {
      txn.emit(EventKind::ProjectCompleted, project_payload(pid));
    }
  }
}

}  // namespace

ProjectSpec parse_project_spec(const Value& v) {
  if (!v.is_object()) fail(ErrorCode::BadSchema, "project spec must be an object");
  ProjectSpec spec;
  if (v.get("name").is_string()) spec.name = v.at("name").as_string();
  const Value& endpoints = v.get("endpoints");
  if (!endpoints.is_null() && !endpoints.is_list()) {
    fail(ErrorCode::BadSchema, "endpoints must be a list");
  }
  if (endpoints.is_null() || endpoints.as_list().empty()) {
    fail(ErrorCode::EmptyProject, "a project needs at least one endpoint");
  }
  std::set<std::pair<HttpMethod, std::string>> routes;
  std::set<std::string> names;
  for (const auto& item : endpoints.as_list()) {
    if (!item.is_object()) fail(ErrorCode::BadSchema, "endpoint must be an object");
    EndpointDescription e;
    const Value& method = item.get("method");
    if (!method.is_string()) fail(ErrorCode::BadSchema, "endpoint needs a method");
    try {
      e.method = enum_from_string<HttpMethod>(method.as_string());
    } catch (const DomainError&) {
      fail(ErrorCode::BadSchema, "unknown method '" + method.as_string() + "'");
    }
    if (!item.get("path").is_string() || item.at("path").as_string().empty() ||
        item.at("path").as_string().front() != '/') {
      fail(ErrorCode::BadSchema, "endpoint path must begin with '/'");
    }
    e.path = item.at("path").as_string();
    if (!item.get("name").is_string() || item.at("name").as_string().empty()) {
      fail(ErrorCode::BadSchema, "endpoint needs a name");
    }
    e.name = item.at("name").as_string();
    if (item.get("description").is_string()) {
      e.description = item.at("description").as_string();
    }
    e.request_schema = parse_fields(item.get("requestSchema"), ErrorCode::BadSchema);
    e.response_schema = parse_fields(item.get("responseSchema"), ErrorCode::BadSchema);
    if (!routes.emplace(e.method, e.path).second) {
      fail(ErrorCode::DuplicateEndpoint,
           std::string(to_string(e.method)) + " " + e.path + " is declared twice");
    }
    if (!names.insert(e.name).second) {
      fail(ErrorCode::DuplicateEndpoint, "endpoint name " + e.name + " is declared twice");
    }
    spec.endpoints.push_back(std::move(e));
  }
  return spec;
}

Engine::Engine(EngineConfig config, State initial)
    : config_(std::move(config)), state_(std::move(initial)) {
  config_.scheduler.validate();
}

template <class Fn>
auto Engine::commit(Millis now, Fn&& fn) {
  Txn txn(state_, now);
  auto result = fn(txn);
  if (!txn.events().empty()) check_completion(txn);
  publish(txn);
  return result;
}

void Engine::publish(Txn& txn) {
  if (txn.events().empty()) return;
  txn.events().back().commit_end = true;
  if (sink_) sink_(txn.events());
  state_ = std::move(txn.mutable_state());
}

ProjectId Engine::create_project(Millis now, const ProjectSpec& spec) {
  if (spec.endpoints.empty()) {
    fail(ErrorCode::EmptyProject, "a project needs at least one endpoint");
  }
  return commit(now, [&](Txn& txn) {
    ProjectId pid{txn.state().next_project};
    Value p = project_payload(pid);
    p["spec"] = to_value(spec);
    txn.emit(EventKind::ProjectCreated, std::move(p));
    for (const auto& e : spec.endpoints) {
      FunctionSpec f;
      f.id = FunctionId{txn.state().next_function};
      f.project = pid;
      f.name = e.name;
      f.params = e.request_schema;
      f.return_type = ScalarType::Object;
      f.description = e.description;
      f.origin.endpoint_root = true;
      f.origin.endpoint_name = e.name;
      Value fp = project_payload(pid);
      fp["function"] = to_value(f);
      txn.emit(EventKind::FunctionSpecAdded, std::move(fp));
      scheduler::enqueue(txn, pid, MicrotaskKind::IdentifyBehavior, f.id);
    }
    return pid;
  });
}

WorkerId Engine::register_worker(Millis now, const std::string& handle) {
  return commit(now, [&](Txn& txn) {
    WorkerId id{txn.state().next_worker};
    Value p = Value::object();
    p["workerId"] = id.str();
    p["handle"] = handle;
    txn.emit(EventKind::WorkerRegistered, std::move(p));
    return id;
  });
}

std::optional<scheduler::Assignment> Engine::fetch(Millis now, WorkerId worker) {
  return commit(now, [&](Txn& txn) {
    txn.state().worker(worker);
    scheduler::reclaim_expired(txn, config_.scheduler);
    return scheduler::fetch_next(txn, worker, config_.scheduler);
  });
}

void Engine::skip(Millis now, WorkerId worker, MicrotaskId microtask) {
  commit(now, [&](Txn& txn) {
    scheduler::skip(txn, worker, microtask, config_.scheduler);
    return 0;
  });
}

std::vector<MicrotaskId> Engine::reclaim(Millis now) {
  return commit(now, [&](Txn& txn) {
    return scheduler::reclaim_expired(txn, config_.scheduler);
  });
}

SubmissionResult Engine::submit(Millis now, WorkerId worker, MicrotaskId id,
                                const Value& body) {
  state_.worker(worker);
  const Microtask& m = state_.microtask(id);
  if (m.state != MicrotaskState::Assigned) {
    fail(ErrorCode::StaleMicrotask, id.str() + " is " + std::string(to_string(m.state)));
  }
  if (m.assignee != worker) {
    fail(ErrorCode::NotAssignee, id.str() + " is not assigned to " + worker.str());
  }
  if (m.lease_expiry && *m.lease_expiry < now) {
    fail(ErrorCode::StaleMicrotask, "lease on " + id.str() + " expired");
  }
  MicrotaskKind kind = body_kind(body);
  if (kind != m.kind) {
    fail(ErrorCode::KindMismatch, std::string(to_string(kind)) + " body for a " +
                                      std::string(to_string(m.kind)) + " microtask");
  }

  SubmissionResult out = commit(now, [&](Txn& txn) {
    Rules rules{txn, config_, runner_, txn.state().microtask(id), worker, {}};
    bool requeue = false;
    switch (kind) {
      case MicrotaskKind::IdentifyBehavior: rules.on_identify(body); break;
      case MicrotaskKind::WriteTest: rules.on_test(body); break;
      case MicrotaskKind::ImplementBehavior: rules.on_implement(body); break;
      case MicrotaskKind::DebugFailure: requeue = rules.on_debug(body); break;
      case MicrotaskKind::ResolveConflict: rules.on_resolve(body); break;
    }
    const Microtask& current = txn.state().microtask(id);
    Value p = project_payload(current.project);
    p["microtaskId"] = id.str();
    p["workerId"] = worker.str();
    p["kind"] = to_string(kind);
    if (requeue) {
      p["outcome"] = "requeued";
      p["attempt"] = current.attempt + 1;
      p["stuck"] = current.attempt + 1 > config_.scheduler.max_attempts;
      p["enqueueSeq"] = txn.state().next_enqueue;
    } else {
      p["outcome"] = "completed";
    }
    txn.emit(EventKind::SubmissionApplied, std::move(p));
    rules.result.requeued = requeue;
    return rules.result;
  });
  const Microtask& done = state_.microtask(id);
  out.project_completed = state_.project(done.project).state == ProjectState::Complete;
  return out;
}

Value Engine::render_assignment(MicrotaskId id) const {
  const State& s = state_;
  const Microtask& m = s.microtask(id);
  const FunctionSpec& f = s.function(m.function);

  auto behavior_view = [&](BehaviorId bid) {
    const Behavior& b = s.behavior(bid);
    Value v = Value::object();
    v["id"] = bid.str();
    v["statement"] = b.statement;
    v["state"] = to_string(b.state);
    v["revisionPending"] = b.revision_pending;
    if (const TestArtifact* t = s.test_of(b)) {
      v["assertions"] = to_value(t->assertions);
      v["testVersion"] = t->version;
    }
    return v;
  };
  auto behaviors_of = [&](bool include_retired) {
    Value::List out;
    for (BehaviorId bid : f.behaviors) {
      if (!include_retired && s.behavior(bid).state == BehaviorState::Retired) continue;
      out.push_back(behavior_view(bid));
    }
    return Value(std::move(out));
  };

  Value out = Value::object();
  out["microtaskId"] = id.str();
  out["kind"] = to_string(m.kind);
  out["projectId"] = m.project.str();
  out["attempt"] = m.attempt;
  if (m.lease_expiry) out["leaseExpiry"] = *m.lease_expiry;
  Value fn = Value::object();
  fn["id"] = f.id.str();
  fn["name"] = f.name;
  fn["params"] = to_value(f.params);
  fn["returnType"] = to_string(f.return_type);
  fn["description"] = f.description;
  out["function"] = std::move(fn);

  switch (m.kind) {
    case MicrotaskKind::IdentifyBehavior:
      out["behaviors"] = behaviors_of(false);
      break;
    case MicrotaskKind::WriteTest:
      out["behavior"] = behavior_view(*m.behavior);
      out["revision"] = m.revision;
      break;
    case MicrotaskKind::ImplementBehavior: {
      if (m.behavior) out["targetBehaviorId"] = m.behavior->str();
      out["behaviors"] = behaviors_of(false);
      if (f.implementation) out["implementation"] = to_value(*f.implementation);
      Value::List known;
      for (FunctionId other : s.project(m.project).functions) {
        const FunctionSpec& g = s.function(other);
        Value v = Value::object();
        v["name"] = g.name;
        v["params"] = to_value(g.params);
        v["returnType"] = to_string(g.return_type);
        known.push_back(std::move(v));
      }
      out["functions"] = Value(std::move(known));
      break;
    }
    case MicrotaskKind::DebugFailure:
      out["behaviors"] = behaviors_of(false);
      if (f.implementation) out["implementation"] = to_value(*f.implementation);
      if (f.open_failure) out["failureReport"] = to_value(*f.open_failure);
      break;
    case MicrotaskKind::ResolveConflict: {
      const Conflict& c = s.conflict(*m.conflict);
      out["conflict"] = to_value(c);
      Value::List pair;
      pair.push_back(behavior_view(c.a.behavior));
      pair.push_back(behavior_view(c.b.behavior));
      out["behaviors"] = Value(std::move(pair));
      break;
    }
  }
  return out;
}

}  // namespace microflow
