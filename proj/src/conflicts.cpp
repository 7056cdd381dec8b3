#include "microflow/conflicts.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "microflow/codec.hpp"
#include "microflow/errors.hpp"
#include "microflow/scheduler.hpp"

namespace microflow::conflicts {

namespace {

bool is_live(const Microtask& m) { return m.state != MicrotaskState::Completed; }

bool involves(const Conflict& c, BehaviorId b) {
  return c.a.behavior == b || c.b.behavior == b;
}

// Conflicted behaviors of `c` with no other Open conflict.
Value released_by(const State& state, const Conflict& c) {
  Value::List out;
  for (BehaviorId bid : {c.a.behavior, c.b.behavior}) {
    if (state.behavior(bid).state != BehaviorState::Conflicted) continue;
    bool held = std::any_of(state.conflicts.begin(), state.conflicts.end(),
                            [&](const auto& entry) {
                              const Conflict& other = entry.second;
                              return other.id != c.id &&
                                     other.state == ConflictState::Open &&
                                     involves(other, bid);
                            });
    if (!held) out.push_back(Value(bid.str()));
  }
  return Value(std::move(out));
}

void emit_resolved(Txn& txn, const Conflict& c) {
  const FunctionSpec& f = txn.state().function(c.function);
  Value p = Value::object();
  p["projectId"] = f.project.str();
  p["conflictId"] = c.id.str();
  p["functionId"] = c.function.str();
  p["released"] = released_by(txn.state(), c);
  txn.emit(EventKind::ConflictResolved, std::move(p));
}

const std::vector<Assertion>* current_assertions(const State& state, BehaviorId bid) {
  const Behavior& b = state.behavior(bid);
  if (b.state == BehaviorState::Retired || b.revision_pending) return nullptr;
  const TestArtifact* t = state.test_of(b);
  return t == nullptr ? nullptr : &t->assertions;
}

}  // namespace

std::vector<Contradiction> find_contradictions(std::span<const ActiveAssertion> assertions) {
  std::map<std::string, std::vector<const ActiveAssertion*>> groups;
  for (const auto& a : assertions) {
    groups[canonical_args(a.assertion->args)].push_back(&a);
  }
  std::vector<Contradiction> out;
  for (const auto& [_, group] : groups) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        const ActiveAssertion* x = group[i];
        const ActiveAssertion* y = group[j];
        if (x->ref.behavior == y->ref.behavior) continue;
        if (canonicalize(x->assertion->expected) ==
            canonicalize(y->assertion->expected)) {
          continue;
        }
        if (y->ref < x->ref) std::swap(x, y);
        out.push_back({x->ref, y->ref, x->assertion->args, x->assertion->expected,
                       y->assertion->expected});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Contradiction& l, const Contradiction& r) {
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });
  return out;
}

std::vector<Contradiction> detect(const State& state, FunctionId function) {
  auto active = active_assertions(state, function);
  return find_contradictions(active);
}

bool witness_contradicts(const State& state, const Conflict& conflict) {
  const auto* xs = current_assertions(state, conflict.a.behavior);
  const auto* ys = current_assertions(state, conflict.b.behavior);
  if (xs == nullptr || ys == nullptr) return false;
  const std::string key = canonical_args(conflict.args);
  for (const auto& x : *xs) {
    if (canonical_args(x.args) != key) continue;
    for (const auto& y : *ys) {
      if (canonical_args(y.args) == key &&
          canonicalize(x.expected) != canonicalize(y.expected)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<ConflictId> open_new(Txn& txn, FunctionId function) {
  std::set<std::pair<BehaviorId, BehaviorId>> covered;
  for (const auto& [_, c] : txn.state().conflicts) {
    if (c.function == function && c.state == ConflictState::Open) {
      covered.emplace(c.a.behavior, c.b.behavior);
      covered.emplace(c.b.behavior, c.a.behavior);
    }
  }
  std::vector<ConflictId> opened;
  for (const auto& x : detect(txn.state(), function)) {
    if (!covered.emplace(x.a.behavior, x.b.behavior).second) continue;
    covered.emplace(x.b.behavior, x.a.behavior);
    const State& s = txn.state();
    Conflict c;
    c.id = ConflictId{s.next_conflict};
    c.function = function;
    c.a = x.a;
    c.b = x.b;
    c.args = x.args;
    c.expected_a = x.expected_a;
    c.expected_b = x.expected_b;
    Value p = Value::object();
    p["projectId"] = s.function(function).project.str();
    p["conflict"] = to_value(c);
    txn.emit(EventKind::ConflictOpened, std::move(p));
    opened.push_back(c.id);
  }
  return opened;
}

MicrotaskId open_resolution(Txn& txn, ConflictId id) {
  const Conflict& c = txn.state().conflict(id);
  if (c.state != ConflictState::Open) {
    fail(ErrorCode::UnknownConflict, id.str() + " is not open");
  }
  if (c.ticket) fail(ErrorCode::AlreadyTicketed, id.str() + " has " + c.ticket->str());
  FunctionId function = c.function;
  ProjectId project = txn.state().function(function).project;
  return scheduler::enqueue(txn, project, MicrotaskKind::ResolveConflict, function,
                            std::nullopt, id);
}

void resolve_stale(Txn& txn, FunctionId function) {
  std::vector<ConflictId> stale;
  for (const auto& [id, c] : txn.state().conflicts) {
    if (c.function == function && c.state == ConflictState::Open && !c.ticket &&
        !witness_contradicts(txn.state(), c)) {
      stale.push_back(id);
    }
  }
  for (ConflictId id : stale) {
    Conflict c = txn.state().conflict(id);
    emit_resolved(txn, c);
  }
}

void ticket_next(Txn& txn, FunctionId function) {
  const State& s = txn.state();
  std::optional<ConflictId> next;
  for (const auto& [id, c] : s.conflicts) {
    if (c.function != function || c.state != ConflictState::Open) continue;
    if (c.ticket && is_live(s.microtask(*c.ticket))) return;
    if (!c.ticket && !next) next = id;
  }
  if (next) open_resolution(txn, *next);
}

std::vector<ConflictId> reconcile(Txn& txn, FunctionId function) {
  resolve_stale(txn, function);
  auto opened = open_new(txn, function);
  ticket_next(txn, function);
  return opened;
}

void apply_resolution(Txn& txn, ConflictId id, const Resolution& edits,
                      WorkerId author) {
  const Conflict c = txn.state().conflict(id);
  if (c.state != ConflictState::Open) {
    fail(ErrorCode::UnknownConflict, id.str() + " is not open");
  }
  auto check_target = [&](BehaviorId bid) {
    if (!involves(c, bid)) {
      fail(ErrorCode::UnknownBehavior, bid.str() + " is not part of " + id.str());
    }
  };
  const ProjectId project = txn.state().function(c.function).project;

  for (const auto& [bid, text] : edits.statements) check_target(bid);
  for (const auto& [bid, assertions] : edits.tests) check_target(bid);

  for (const auto& [bid, text] : edits.statements) {
    const State& s = txn.state();
    if (s.behavior(bid).statement == text) continue;
    validate_statement(s, s.function(c.function), text, bid);
    Value p = Value::object();
    p["projectId"] = project.str();
    p["behaviorId"] = bid.str();
    p["statement"] = text;
    txn.emit(EventKind::BehaviorEdited, std::move(p));
  }

  for (const auto& [bid, assertions] : edits.tests) {
    const State& s = txn.state();
    validate_assertions(s.function(c.function), assertions);
    const Behavior& b = s.behavior(bid);
    TestArtifact t;
    t.behavior = bid;
    t.assertions = assertions;
    t.author = author;
    if (const TestArtifact* prior = s.test_of(b)) {
      t.id = prior->id;
      t.version = prior->version + 1;
    } else {
      t.id = TestId{s.next_test};
    }
    Value p = Value::object();
    p["projectId"] = project.str();
    p["test"] = to_value(t);
    txn.emit(EventKind::TestStored, std::move(p));
  }

  if (witness_contradicts(txn.state(), c)) {
    fail(ErrorCode::UnresolvedContradiction,
         "assertions for " + canonical_args(c.args) + " still disagree");
  }
  emit_resolved(txn, txn.state().conflict(id));
  reconcile(txn, c.function);
}

bool has_open_conflict(const State& state, FunctionId function) {
  return std::any_of(state.conflicts.begin(), state.conflicts.end(),
                     [&](const auto& entry) {
                       return entry.second.function == function &&
                              entry.second.state == ConflictState::Open;
                     });
}

}  // namespace microflow::conflicts
